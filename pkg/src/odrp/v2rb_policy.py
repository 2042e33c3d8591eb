"""Re-optimising fleet policy over the persistent V2RB database.

Per decision step: update stored bundles from the new vehicle positions,
test RV/RR compatibility of the new requests, optionally pre-select
vehicles, grow new bundles, solve the assignment and commit the chosen
tours.  Previously assigned requests may move between vehicles but are
never dropped.
"""
from __future__ import annotations

import time

import numpy as np

from .assignment import AssignmentProblem, Candidate, solve
from .demand import RequestState
from .simulation import StepTiming
from .tours import Infeasible, schedule
from .v2rb import (RRGraph, V2RBDatabase, build_database, rebuild_from_scratch, rv_compatible,
                   update_database)
from .vehicle_filter import FilterParams, VehicleView, filter_vehicles, od_direction


class V2RBPolicy:
    """Re-optimising policy over the persistent V2RB database."""

    name = "v2rb"

    def __init__(self, heuristic: FilterParams | None = None, timeout_s: float = 20.0,
                 max_tours=None, check_persistence: bool = False, pre_increment_weights=True,
                 record_db: bool = False, record_problems: bool = False):
        self.heuristic = heuristic
        self.timeout_s = timeout_s
        self.max_tours = max_tours
        self.check_persistence = check_persistence
        self.pre_increment_weights = pre_increment_weights
        self.db = V2RBDatabase()
        self.rr = None
        self.persistence_checks = 0
        self.persistence_mismatches = []
        self.filter_sizes = []
        self.record_db = record_db
        self.db_rows = []
        self.record_problems = record_problems
        self.problems = []

    def decide(self, sim, step, now, new, anchors):
        reqs, net, params = sim.requests, sim.net, sim.params
        if self.rr is None:
            self.rr = RRGraph(reqs, net, params)
        timing = StepTiming(step, now, n_new=len(new))
        vehicles = sim.vehicles
        onboard_all = set().union(*(a.onboard for a in anchors.values()))
        assigned = {rid for v in vehicles for rid in v.assigned}
        new_ids = sorted(r.id for r in new)

        t0 = time.perf_counter()
        eligible = assigned | set(new_ids)
        update_database(self.db, anchors, reqs, eligible, net, params, self.max_tours)
        t1 = time.perf_counter()

        rv = {r.id: {vid for vid, a in anchors.items() if rv_compatible(a, r, net)} for r in new}
        partners = sorted(assigned | onboard_all | set(new_ids))
        for a in new_ids:
            for b in partners:
                if b != a:
                    self.rr(a, b)
        t2 = time.perf_counter()

        candidates = rv
        if self.heuristic is not None:
            candidates = self._filter(sim, step, now, new, rv, anchors)
        build_database(self.db, new_ids, anchors, candidates, reqs, net, params, self.rr,
                       self.max_tours)
        t3 = time.perf_counter()

        if self.check_persistence:
            scratch = rebuild_from_scratch(anchors, reqs, eligible, net, params, self.rr,
                                           max_tours=self.max_tours)
            self.persistence_checks += 1
            if scratch.signature() != self.db.signature():
                self.persistence_mismatches.append(step)
        if self.record_db:
            self.db_rows.extend(self.db.dump_rows(step))

        t4 = time.perf_counter()
        cands = [Candidate(v.vehicle, v.bundle, v.best_utility) for v in self.db]
        problem = AssignmentProblem(cands, frozenset(new_ids), frozenset(assigned),
                                    params.penalty_for_not_assigned_request)
        keep = []
        for veh in sim.vehicles:
            cur = self.db.get(veh.id, tuple(sorted({rid for rid, _ in veh.events})))
            if cur is not None:
                keep.append(Candidate(veh.id, cur.bundle, cur.best_utility))
        sol = solve(problem, self.timeout_s, incumbent=keep)
        t5 = time.perf_counter()
        if self.record_problems:
            self.problems.append((step, problem, sol))
        self.commit(sim, sol, now, anchors)
        timing.rr_rv_s = t2 - t1
        timing.build_s = (t1 - t0) + (t3 - t2)
        timing.solve_s = t5 - t4
        timing.n_v2rb = len(self.db)
        timing.status = sol.status
        return timing

    def _filter(self, sim, step, now, new, rv, anchors):
        net = sim.net
        rng = np.random.default_rng([sim.seed, 7, step])
        order = [new[i] for i in rng.permutation(len(new))]
        views = {}
        for v in sim.vehicles:
            stops = schedule(anchors[v.id], v.events, sim.requests, net, sim.params)
            nodes = tuple(s.node for s in stops.stops) if not isinstance(stops, Infeasible) else ()
            views[v.id] = VehicleView(v.id, anchors[v.id].node, nodes, v.assigned,
                                      frozenset(v.onboard))
        states = {v.id: v.heuristic for v in sim.vehicles}

        def tt(a, b):
            return net.travel(a, b, now)[0]

        out = {}
        for r in order:
            picked = filter_vehicles(r, rv[r.id], views, states, self.heuristic, self.rr, tt,
                                     od_direction(r, net), len(sim.vehicles),
                                     self.pre_increment_weights)
            self.filter_sizes.append(len(picked))
            out[r.id] = picked
        return out

    def commit(self, sim, sol, now, anchors):
        chosen = sol.by_vehicle()
        reqs = sim.requests
        for veh in sim.vehicles:
            c = chosen.get(veh.id)
            if c is not None:
                tour = self.db.get(veh.id, c.bundle).best_tour
            elif veh.onboard:
                tour = self.db.get(veh.id, tuple(sorted(veh.onboard))).best_tour
            else:
                tour = schedule(anchors[veh.id], (), reqs, sim.net, sim.params)
            was_idle = not veh.events
            for rid in tour.requests - veh.onboard:
                r = reqs[rid]
                if r.state is RequestState.PENDING:
                    r.set_state(RequestState.ASSIGNED)
                    r.assigned_vehicle = veh.id
                    sim.log(now, "assign", veh.id, rid, r.origin)
                elif r.assigned_vehicle != veh.id:
                    r.assigned_vehicle = veh.id
                    sim.log(now, "reassign", veh.id, rid, r.origin)
            if tour.events != veh.events:
                veh.adopt(tour, sim.net, sim.params, now)
            if was_idle and tour.events and veh.heuristic is not None:
                veh.heuristic.n_d = 0
                veh.heuristic.n_n = 0
