"""Vehicle agent: executes a scheduled tour edge by edge and stop by stop."""
from __future__ import annotations

import math

from .demand import RequestState
from .network import Network
from .params import Params
from .tours import Anchor, Tour


class SimulationInvariantError(RuntimeError):
    pass


# action kinds
ENTER, EXIT, ARRIVE_STOP, BOARD, DONE = range(5)


class Vehicle:
    def __init__(self, vid: int, node: int, capacity: int, heuristic_state=None):
        self.id = vid
        self.node = node
        self.capacity = capacity
        self.onboard = set()
        self.odometer = 0.0
        self.heuristic = heuristic_state
        self.events = ()          # remaining planned events of the current tour
        self.actions = []         # (time, kind, payload, leg_id)
        self.ptr = 0
        self.edge = None          # (u, v, length, t_exit, leg_id) while driving
        self.stop = None          # dict while at a stop (arrival, alighted, served, done)
        self._leg_seq = 0
        self.legs = {}            # leg_id -> (target, arrival, [(u, v, tt, len) ...])

    # --- state queries -------------------------------------------------
    @property
    def assigned(self) -> frozenset:
        return frozenset(rid for rid, _ in self.events if rid not in self.onboard)

    def next_action_time(self) -> float:
        return self.actions[self.ptr][0] if self.ptr < len(self.actions) else math.inf

    def is_busy(self) -> bool:
        return self.ptr < len(self.actions)

    def anchor(self, now: float) -> Anchor:
        onboard = frozenset(self.onboard)
        if self.edge is not None:
            u, v, length, t_exit, leg_id = self.edge
            target, arrival, route = self.legs[leg_id]
            locked = None
            if target != v:
                idx = next(i for i, e in enumerate(route) if e[0] == u and e[1] == v)
                rest = route[idx + 1:]
                locked = (target, arrival - t_exit, math.fsum(e[3] for e in rest))
            return Anchor(self.id, v, t_exit, self.capacity, onboard, None, locked)
        if self.stop is not None and self.stop["last"] is not None:
            return Anchor(self.id, self.node, now, self.capacity, onboard,
                          self.stop["last"] + self.stop["T_B"])
        return Anchor(self.id, self.node, now, self.capacity, onboard)

    # --- plan adoption -------------------------------------------------
    def adopt(self, tour: Tour, net: Network, params: Params, now: float) -> None:
        """Replace pending actions by those of ``tour`` (scheduled from ``self.anchor(now)``)."""
        keep = []
        pending = self.actions[self.ptr:]
        first_locked = bool(tour.legs) and tour.legs[0].locked
        if self.edge is not None:
            leg_id = self.edge[4]
            for a in pending:
                if a[1] == EXIT and a[3] == leg_id and a[2][1] == self.edge[1]:
                    keep.append(a)
                    break
            if first_locked:
                keep = [a for a in pending if a[3] == leg_id and a[1] in (ENTER, EXIT)]
            elif keep:
                # the old leg is cut at the end of this edge; record the stub as its own leg
                u, v, length, t_exit, _ = self.edge
                tt = next(e[2] for e in self.legs[leg_id][2] if e[0] == u and e[1] == v)
                self._leg_seq += 1
                self.legs[self._leg_seq] = (v, t_exit, [(u, v, tt, length)])
                self.edge = (u, v, length, t_exit, self._leg_seq)
                keep = [(t_exit, EXIT, (u, v, length), self._leg_seq)]
        elif self.stop is not None and not tour.stops and self.stop["last"] is not None:
            keep = [(max(now, self.stop["last"] + self.stop["T_B"]), DONE, None, None)]
        actions = list(keep)
        legs = iter(tour.legs)
        first_has_leg = len(tour.legs) == len(tour.stops)
        for i, stop in enumerate(tour.stops):
            if i > 0 or first_has_leg:
                leg = next(legs)
                if not leg.locked:
                    actions.extend(self._leg_actions(leg, net))
            actions.append((stop.arrival, ARRIVE_STOP, stop, None))
            for rid, t in sorted(zip(stop.boarding, stop.board_times), key=lambda x: (x[1], x[0])):
                actions.append((t, BOARD, (stop, rid), None))
            actions.append((stop.departure, DONE, stop, None))
        self.actions = actions
        self.ptr = 0
        self.events = tour.events

    def _leg_actions(self, leg, net: Network):
        self._leg_seq += 1
        lid = self._leg_seq
        route = net.shortest_path(leg.source, leg.target, leg.depart % 86400)
        edges = net.route_edges(route, leg.depart % 86400)
        arrival = leg.depart + leg.travel_time
        self.legs[lid] = (leg.target, arrival, edges)
        out = []
        t = leg.depart
        for k, (u, v, tt, length) in enumerate(edges):
            out.append((t, ENTER, (u, v, length), lid))
            t = arrival if k == len(edges) - 1 else t + tt
            out.append((t, EXIT, (u, v, length), lid))
        return out

    # --- execution -----------------------------------------------------
    def advance(self, now: float, sim) -> None:
        """Execute every pending action with time <= now."""
        acts = self.actions
        while self.ptr < len(acts) and acts[self.ptr][0] <= now:
            t, kind, payload, lid = acts[self.ptr]
            self.ptr += 1
            if kind == ENTER:
                u, v, length = payload
                if u != self.node:
                    raise SimulationInvariantError(f"vehicle {self.id} enters edge from {u} at {self.node}")
                exit_t = next(a[0] for a in acts[self.ptr:] if a[1] == EXIT)
                self.edge = (u, v, length, exit_t, lid)
                self.stop = None
                sim.log(t, "depart", self.id, None, u)
            elif kind == EXIT:
                u, v, length = payload
                self.edge = None
                self.node = v
                self.odometer += length
                sim.log(t, "arrive", self.id, None, v)
            elif kind == ARRIVE_STOP:
                self._arrive_stop(t, payload, sim)
            elif kind == BOARD:
                self._board(t, payload, sim)
            elif kind == DONE:
                self.stop = None
        if self.ptr >= len(acts):
            self.actions = []
            self.ptr = 0

    def _arrive_stop(self, t, stop, sim):
        if stop.node != self.node:
            raise SimulationInvariantError(f"vehicle {self.id} at {self.node}, stop at {stop.node}")
        T_B = sim.params.boarding_time
        alighted = False
        for rid in stop.alighting:
            r = sim.requests[rid]
            deadline = r.pickup_time + T_B + r.ride_limit
            if t > deadline + 1e-9:
                raise SimulationInvariantError(f"request {rid} arrives {t} after deadline {deadline}")
            self.onboard.discard(rid)
            r.set_state(RequestState.COMPLETED)
            r.dropoff_time = t
            self.events = tuple(e for e in self.events if e[0] != rid)
            sim.log(t, "alight", self.id, rid, self.node)
            alighted = True
        if self.stop is not None and self.stop["node"] == self.node:
            last = self.stop["last"]
        else:
            last = None
        if alighted:
            last = t if last is None else max(last, t)
        self.stop = {"node": self.node, "last": last, "T_B": T_B}

    def _board(self, t, payload, sim):
        stop, rid = payload
        r = sim.requests[rid]
        if not (r.t_ep - 1e-9 <= t <= r.t_lp + 1e-9):
            raise SimulationInvariantError(f"request {rid} picked up at {t} outside window")
        r.set_state(RequestState.ON_BOARD)
        r.pickup_time = t
        self.onboard.add(rid)
        self.events = tuple(e for e in self.events if not (e[0] == rid and e[1] is False))
        sim.log(t, "board", self.id, rid, self.node)
        if len(self.onboard) > self.capacity:
            raise SimulationInvariantError(f"vehicle {self.id} over capacity")
        last = self.stop["last"]
        self.stop["last"] = t if last is None else max(last, t)
