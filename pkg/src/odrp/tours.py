"""Stop sequences, time-window scheduling, insertion candidates and saved-VMT utility.

A tour is stored as an ordered tuple of events ``(request_id, is_dropoff)``.
Consecutive events at the same node are served in one stop.  At a stop,
alighting happens on arrival and each passenger boards at
``max(arrival, t_ep)``, postponed further when their in-vehicle deadline
would otherwise be missed.  The vehicle leaves one boarding time after the
last boarding or alighting.  The returned
schedule is the earliest one satisfying every constraint, so feasibility is
monotone in the start time and closed under removing a request's events.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .network import Network
from .params import Params

PICKUP = False
DROPOFF = True

LATE_PICKUP = "late_pickup"
DETOUR = "detour"
CAPACITY = "capacity"
ORDER = "order"


@dataclass(frozen=True)
class Anchor:
    """Where and when a vehicle can start executing a new plan.

    ``min_depart`` is the earliest time it may leave ``node`` (a running dwell);
    ``locked`` is ``(target, travel_time, distance)`` of the remainder of the
    leg the vehicle is committed to while traversing an edge.
    """
    vehicle: int
    node: int
    time: float
    capacity: int
    onboard: frozenset = frozenset()
    min_depart: float | None = None
    locked: tuple | None = None

    @property
    def depart_time(self) -> float:
        return self.time if self.min_depart is None else max(self.time, self.min_depart)


@dataclass(frozen=True)
class Stop:
    node: int
    boarding: tuple
    alighting: tuple
    arrival: float
    service: float
    departure: float
    board_times: tuple = ()


@dataclass(frozen=True)
class Leg:
    source: int
    target: int
    depart: float
    travel_time: float
    distance: float
    locked: bool = False


@dataclass(frozen=True)
class Tour:
    vehicle: int
    events: tuple
    stops: tuple
    legs: tuple
    distance: float
    utility: float
    start_time: float

    @property
    def requests(self) -> frozenset:
        return frozenset(rid for rid, _ in self.events)

    def pickup_service(self, rid):
        for s in self.stops:
            if rid in s.boarding:
                return s.board_times[s.boarding.index(rid)]
        return None


@dataclass(frozen=True)
class Infeasible:
    reason: str
    request: int | None = None

    def __bool__(self):
        return False


def event_node(event, reqs) -> int:
    r = reqs[event[0]]
    return r.destination if event[1] else r.origin


def _group(events, reqs, anchor):
    """Merge consecutive same-node events into stops; check order and capacity."""
    nodes, boards, alights = [], [], []
    picked = set()
    load = len(anchor.onboard)
    for rid, drop in events:
        r = reqs[rid]
        if drop:
            if rid not in anchor.onboard and rid not in picked:
                return Infeasible(ORDER, rid)
            node = r.destination
        else:
            if rid in anchor.onboard or rid in picked:
                return Infeasible(ORDER, rid)
            picked.add(rid)
            node = r.origin
        if not nodes or nodes[-1] != node:
            nodes.append(node)
            boards.append([])
            alights.append([])
        (alights if drop else boards)[-1].append(rid)
    for b, a in zip(boards, alights):
        load += len(b) - len(a)
        if load > anchor.capacity:
            return Infeasible(CAPACITY, b[0])
    if len(picked) and any((rid, DROPOFF) not in events for rid in picked):
        return Infeasible(ORDER)
    return nodes, boards, alights


def schedule(anchor: Anchor, events, reqs, net: Network, params: Params):
    """Earliest feasible schedule of ``events`` from ``anchor``, or ``Infeasible``.

    Constraints: pick-up service start within ``[t_ep, t_lp]``; arrival at the
    destination no later than boarding completion plus ``t_direct + delta``;
    occupancy never above capacity.
    """
    events = tuple(events)
    grouped = _group(events, reqs, anchor)
    if isinstance(grouped, Infeasible):
        return grouped
    nodes, boards, alights = grouped
    n = len(nodes)
    T_B = params.boarding_time
    extra = {}
    fixed_deadline = {}
    for rid in anchor.onboard:
        r = reqs[rid]
        fixed_deadline[rid] = r.pickup_time + T_B + r.ride_limit

    for _ in range(2 * len(events) + 2):
        changed = False
        t = anchor.time
        pos = anchor.node
        board_at = {}
        arrivals, services, departures, legs, btimes = [], [], [], [], []
        for i in range(n):
            node = nodes[i]
            if i == 0 and node == anchor.node:
                arr = anchor.time
            else:
                dep = anchor.depart_time if i == 0 else t
                if i == 0 and anchor.locked is not None and anchor.locked[0] == node:
                    tt, dd = anchor.locked[1], anchor.locked[2]
                    legs.append(Leg(pos, node, dep, tt, dd, True))
                else:
                    tt, dd = net.travel(pos, node, dep)
                    legs.append(Leg(pos, node, dep, tt, dd))
                arr = dep + tt
            bt = []
            for rid in boards[i]:
                r = reqs[rid]
                b = max(arr, r.t_ep, extra.get(rid, -math.inf))
                if b > r.t_lp:
                    return Infeasible(DETOUR if extra.get(rid, -math.inf) > r.t_lp else LATE_PICKUP, rid)
                bt.append(b)
                board_at[rid] = b
            for rid in alights[i]:
                if rid in fixed_deadline:
                    if arr > fixed_deadline[rid]:
                        return Infeasible(DETOUR, rid)
                    continue
                need = arr - T_B - reqs[rid].ride_limit
                if need > board_at[rid]:
                    extra[rid] = need
                    changed = True
            svc = max(bt, default=arr)
            dep_next = max(svc, arr) + T_B
            if i == 0 and node == anchor.node and anchor.min_depart is not None:
                dep_next = max(dep_next, anchor.min_depart)
            arrivals.append(arr)
            services.append(svc)
            departures.append(dep_next)
            btimes.append(tuple(bt))
            t = dep_next
            pos = node
        if not changed:
            break
    else:
        return Infeasible(DETOUR)

    stops = tuple(Stop(nodes[i], tuple(boards[i]), tuple(alights[i]), arrivals[i], services[i],
                       departures[i], btimes[i]) for i in range(n))
    distance = math.fsum(leg.distance for leg in legs)
    direct = math.fsum(reqs[rid].d_direct for rid in {rid for rid, _ in events})
    return Tour(anchor.vehicle, events, stops, tuple(legs), distance, direct - distance, anchor.time)


check_feasibility = schedule


def insertions(events, rid) -> list:
    """All placements of ``rid``'s pick-up and a later drop-off into ``events``."""
    events = tuple(events)
    p, d = (rid, PICKUP), (rid, DROPOFF)
    k = len(events)
    out = []
    for i in range(k + 1):
        head = events[:i] + (p,)
        for j in range(i, k + 1):
            out.append(head + events[i:j] + (d,) + events[j:])
    return out


def utility(tour) -> float:
    """Saved VMT: summed direct distances of the tour's requests minus its driven distance."""
    return 0.0 if tour is None else tour.utility


def remove_request(events, rid) -> tuple:
    return tuple(e for e in events if e[0] != rid)
