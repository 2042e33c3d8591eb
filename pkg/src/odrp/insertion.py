"""Insertion heuristic: each request goes to the vehicle whose tour gains most.

Requests are handled one at a time in arrival order and the winning tour is
applied before the next request is considered.  Assignments are final.
"""
from __future__ import annotations

import time

from .demand import RequestState
from .simulation import StepTiming
from .tours import Infeasible, insertions, schedule
from .v2rb import rv_compatible
from .vehicle import SimulationInvariantError


def best_insertion(anchor, base, request, reqs, net, params):
    """Highest-utility feasible tour obtained by inserting ``request`` into ``base``."""
    top = None
    for ev in insertions(base.events, request.id):
        tour = schedule(anchor, ev, reqs, net, params)
        if isinstance(tour, Infeasible):
            continue
        if top is None or tour.utility > top.utility or \
                (tour.utility == top.utility and tour.events < top.events):
            top = tour
    return top


def assign_insertion(requests, anchors: dict, plans: dict, reqs, net, params):
    """Sequentially assign ``requests``.

    ``plans`` maps vehicle id -> current Tour and is updated in place.
    Returns ``(assigned, rejected)`` with ``assigned`` a list of
    ``(request, vehicle, tour)``.
    """
    assigned, rejected = [], []
    for r in sorted(requests, key=lambda x: (x.t_r, x.id)):
        best = None
        for vid in sorted(anchors):
            if not rv_compatible(anchors[vid], r, net):
                continue
            top = best_insertion(anchors[vid], plans[vid], r, reqs, net, params)
            if top is None:
                continue
            gain = top.utility - plans[vid].utility
            if best is None or gain > best[0]:
                best = (gain, vid, top)
        if best is None:
            rejected.append(r)
            continue
        _, vid, tour = best
        plans[vid] = tour
        assigned.append((r, vid, tour))
    return assigned, rejected


class InsertionPolicy:
    name = "insertion"

    def decide(self, sim, step, now, new, anchors):
        timing = StepTiming(step, now, n_new=len(new))
        t0 = time.perf_counter()
        reqs, net, params = sim.requests, sim.net, sim.params
        plans = {}
        for vid, a in anchors.items():
            tour = schedule(a, sim.vehicles[vid].events, reqs, net, params)
            if isinstance(tour, Infeasible):
                raise SimulationInvariantError(f"vehicle {vid}: current plan infeasible ({tour.reason})")
            plans[vid] = tour
        assigned, rejected = assign_insertion(new, anchors, plans, reqs, net, params)
        for r, vid, _ in assigned:
            r.set_state(RequestState.ASSIGNED)
            r.assigned_vehicle = vid
            sim.log(now, "assign", vid, r.id, r.origin)
        for r in rejected:
            r.set_state(RequestState.REJECTED)
            sim.log(now, "reject", None, r.id, r.origin)
        for vid in sorted({vid for _, vid, _ in assigned}):
            sim.vehicles[vid].adopt(plans[vid], net, params, now)
        timing.build_s = time.perf_counter() - t0
        return timing
