"""Vehicle-to-request-bundles: compatibility graphs and the persistent tour database.

A V2RB holds every feasible tour of one vehicle that serves exactly one set
of requests.  Bundles always contain the vehicle's on-board requests.  A
bundle with ``n`` non-boarded requests is grown only from its designated
parent (the bundle without its largest non-boarded request id) by inserting
the missing request into each stored parent tour; every other parent must
already exist and all non-boarded pairs must be RR-compatible.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

from .demand import RequestState
from .network import Network
from .params import Params
from .tours import DROPOFF, PICKUP, Anchor, Infeasible, insertions, schedule

LOG = logging.getLogger(__name__)


@dataclass
class V2RB:
    vehicle: int
    bundle: tuple
    tours: list
    best_tour: object = field(init=False)

    def __post_init__(self):
        if not self.tours:
            raise ValueError("a V2RB needs at least one feasible tour")
        self.best_tour = best_of(self.tours)

    @property
    def grade(self) -> int:
        return len(self.bundle)

    @property
    def best_utility(self) -> float:
        return self.best_tour.utility


def best_of(tours):
    return min(tours, key=lambda t: (-t.utility, t.events))


class V2RBDatabase:
    """Per-vehicle shards of ``bundle -> V2RB``."""

    def __init__(self):
        self.shards = {}

    def shard(self, vid) -> dict:
        return self.shards.setdefault(vid, {})

    def get(self, vid, bundle):
        return self.shards.get(vid, {}).get(tuple(bundle))

    def __iter__(self):
        for vid in sorted(self.shards):
            shard = self.shards[vid]
            for key in sorted(shard):
                yield shard[key]

    def __len__(self):
        return sum(len(s) for s in self.shards.values())

    def signature(self) -> dict:
        """``(vehicle, bundle) -> best_utility`` for equivalence checks."""
        return {(v.vehicle, v.bundle): v.best_utility for v in self}

    def dump_rows(self, step):
        for v in self:
            yield (step, v.vehicle, " ".join(map(str, v.bundle)), v.grade, len(v.tours),
                   v.best_utility)


def earliest_arrival(anchor: Anchor, node: int, net: Network) -> float:
    if node == anchor.node:
        return anchor.time
    dep = anchor.depart_time
    if anchor.locked is not None and anchor.locked[0] == node:
        return dep + anchor.locked[1]
    return dep + net.travel(anchor.node, node, dep)[0]


def rv_compatible(anchor: Anchor, request, net: Network) -> bool:
    """Necessary condition: the vehicle can reach the origin by ``t_lp``."""
    return earliest_arrival(anchor, request.origin, net) <= request.t_lp


def _two_request_orders(a, b):
    evs = [(a, PICKUP), (a, DROPOFF), (b, PICKUP), (b, DROPOFF)]
    for perm in itertools.permutations(evs):
        if perm.index((a, PICKUP)) < perm.index((a, DROPOFF)) and \
                perm.index((b, PICKUP)) < perm.index((b, DROPOFF)):
            yield perm


def rr_compatible(r1, r2, reqs, net: Network, params: Params) -> bool:
    """True iff some ordering of both requests is feasible for a virtual vehicle.

    The virtual vehicle appears at the first origin of the ordering at that
    request's earliest pick-up time.
    """
    for order in _two_request_orders(r1.id, r2.id):
        first = reqs[order[0][0]]
        anchor = Anchor(-1, first.origin, first.t_ep, params.vehicle_capacity)
        if schedule(anchor, order, reqs, net, params):
            return True
    return False


class RRGraph:
    """Symmetric RR compatibility with lazy evaluation and memoisation."""

    def __init__(self, reqs, net: Network, params: Params):
        self.reqs = reqs
        self.net = net
        self.params = params
        self._cache = {}

    def __call__(self, a: int, b: int) -> bool:
        key = (a, b) if a < b else (b, a)
        hit = self._cache.get(key)
        if hit is None:
            hit = rr_compatible(self.reqs[key[0]], self.reqs[key[1]], self.reqs, self.net,
                                self.params)
            self._cache[key] = hit
        return hit

    def edges(self):
        return sorted(k for k, v in self._cache.items() if v)

    def forget(self, rids) -> None:
        rids = set(rids)
        for key in [k for k in self._cache if k[0] in rids or k[1] in rids]:
            del self._cache[key]


def _feasible_tours(anchor, candidate_events, reqs, net, params, max_tours=None):
    seen = set()
    out = []
    for ev in candidate_events:
        if ev in seen:
            continue
        seen.add(ev)
        tour = schedule(anchor, ev, reqs, net, params)
        if not isinstance(tour, Infeasible):
            out.append(tour)
    if max_tours is not None and len(out) > max_tours:
        out.sort(key=lambda t: (-t.utility, t.events))
        out = out[:max_tours]
    return out


def base_events(onboard):
    """All drop-off orders for the on-board requests."""
    return [tuple((rid, DROPOFF) for rid in perm) for perm in itertools.permutations(sorted(onboard))]


def build_database(db: V2RBDatabase, new_requests, anchors: dict, candidates: dict, reqs,
                   net: Network, params: Params, rr: RRGraph, max_tours=None) -> V2RBDatabase:
    """Add V2RBs involving ``new_requests`` to ``db``.

    ``candidates`` maps request id -> set of vehicle ids allowed to build
    bundles with it (all RV-compatible vehicles when no pre-filter is used).
    """
    new_requests = sorted(new_requests)
    for vid in sorted(anchors):
        anchor = anchors[vid]
        shard = db.shard(vid)
        onboard = anchor.onboard
        base_key = tuple(sorted(onboard))
        if onboard and base_key not in shard:
            tours = _feasible_tours(anchor, base_events(onboard), reqs, net, params, max_tours)
            if not tours:
                raise AssertionError(f"vehicle {vid}: on-board obligations infeasible")
            shard[base_key] = V2RB(vid, base_key, tours)
        mine = [r for r in new_requests if vid in candidates.get(r, ()) and r not in onboard]
        if not mine:
            continue
        level = 0
        while True:
            if level == 0:
                parents = [base_key]
            else:
                parents = sorted(k for k in shard if len(k) - len(onboard) == level)
            if not parents:
                break
            for pkey in parents:
                free = [q for q in pkey if q not in onboard]
                top = free[-1] if free else -1
                parent_events = [t.events for t in shard[pkey].tours] if pkey in shard else [()]
                for r in mine:
                    if r <= top:
                        continue
                    key = tuple(sorted(pkey + (r,)))
                    if key in shard:
                        continue
                    if not all(rr(q, r) for q in free):
                        continue
                    if not all(tuple(x for x in key if x != q) in shard for q in free):
                        continue
                    cand = (ev for pe in parent_events for ev in insertions(pe, r))
                    tours = _feasible_tours(anchor, cand, reqs, net, params, max_tours)
                    if tours:
                        shard[key] = V2RB(vid, key, tours)
            level += 1
    return db


def update_database(db: V2RBDatabase, anchors: dict, reqs, eligible, net: Network,
                    params: Params, max_tours=None) -> V2RBDatabase:
    """Re-schedule stored tours from each vehicle's current anchor and prune.

    ``eligible`` holds the request ids that may still be (re)assigned:
    assigned-but-not-boarded requests and this step's new requests.  Bundles
    with any other request (rejected, boarded elsewhere, expired) are dropped;
    completed requests are removed from bundles; bundles missing an on-board
    request are dropped.
    """
    eligible = set(eligible)
    for vid in sorted(db.shards):
        shard = db.shards[vid]
        anchor = anchors.get(vid)
        if anchor is None:
            shard.clear()
            continue
        onboard = anchor.onboard
        updated = {}
        for key in sorted(shard):
            v2rb = shard[key]
            done = {r for r in key if reqs[r].state is RequestState.COMPLETED}
            members = [r for r in key if r not in done]
            if not members or not onboard.issubset(members):
                continue
            if any(r not in onboard and r not in eligible for r in members):
                continue
            new_key = tuple(members)
            events = set()
            for t in v2rb.tours:
                events.add(tuple(e for e in t.events
                                 if e[0] not in done and not (e[0] in onboard and e[1] is PICKUP)))
            tours = _feasible_tours(anchor, sorted(events), reqs, net, params, max_tours)
            if not tours:
                continue
            if new_key in updated:
                tours = _feasible_tours(anchor, sorted({t.events for t in tours + updated[new_key].tours}),
                                        reqs, net, params, max_tours)
            updated[new_key] = V2RB(vid, new_key, tours)
        db.shards[vid] = updated
    for vid in anchors:
        db.shard(vid)
    return db


def rebuild_from_scratch(anchors: dict, reqs, eligible, net: Network, params: Params,
                         rr: RRGraph | None = None, candidates: dict | None = None,
                         max_tours=None) -> V2RBDatabase:
    """Reference database built without persistence (test oracle)."""
    rr = rr or RRGraph(reqs, net, params)
    onboard_any = set().union(*(a.onboard for a in anchors.values())) if anchors else set()
    pool = sorted(r for r in eligible if r not in onboard_any)
    if candidates is None:
        candidates = {r: {vid for vid, a in anchors.items() if rv_compatible(a, reqs[r], net)}
                      for r in pool}
    return build_database(V2RBDatabase(), pool, anchors, candidates, reqs, net, params, rr,
                          max_tours)


def check_downward_closure(db: V2RBDatabase, anchors: dict) -> list:
    """Bundles whose proper sub-bundles (containing all on-board requests) are missing."""
    missing = []
    for v in db:
        onboard = anchors[v.vehicle].onboard
        free = [q for q in v.bundle if q not in onboard]
        for q in free:
            sub = tuple(x for x in v.bundle if x != q)
            if sub and db.get(v.vehicle, sub) is None:
                missing.append((v.vehicle, v.bundle, sub))
    return missing
