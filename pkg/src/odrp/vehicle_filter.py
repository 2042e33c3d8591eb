"""Three-rule vehicle pre-selection limiting which vehicles build bundles per request.

Rule I ranks vehicles with an assigned tour by how cheaply the request could
be inserted, weighted by RR compatibility with the tour's requests.  Rule II
clusters requests with similar travel directions on idle vehicles; Rule III
adds the nearest idle vehicles, penalised by how many requests each already
received.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

EXCLUDED = "excluded"
RECLASSIFY_IDLE = "reclassify_idle"


@dataclass(frozen=True)
class FilterParams:
    chi_a: int
    chi_ud: int
    chi_un: int

    def __post_init__(self):
        if min(self.chi_a, self.chi_ud, self.chi_un) < 0:
            raise ValueError("heuristic counts must be non-negative")

    @property
    def total(self) -> int:
        return self.chi_a + self.chi_ud + self.chi_un

    @classmethod
    def parse(cls, text):
        """``"a,ud,un"`` -> FilterParams, ``"off"`` -> None."""
        if text is None or str(text).strip().lower() in ("off", "none", ""):
            return None
        parts = [int(p) for p in str(text).replace("(", "").replace(")", "").split(",")]
        if len(parts) != 3:
            raise ValueError(f"heuristic needs three counts, got {text!r}")
        return cls(*parts)

    def __str__(self):
        return f"{self.chi_a},{self.chi_ud},{self.chi_un}"


@dataclass
class VehicleHeuristicState:
    direction: np.ndarray
    n_d: int = 0
    n_n: int = 0

    @classmethod
    def random(cls, rng):
        angle = rng.uniform(0.0, 2.0 * math.pi)
        return cls(np.array([math.cos(angle), math.sin(angle)]))


@dataclass(frozen=True)
class VehicleView:
    """What the filter needs to know about a vehicle at decision time."""
    vehicle: int
    node: int
    stop_nodes: tuple = ()
    assigned: frozenset = frozenset()
    onboard: frozenset = frozenset()

    @property
    def is_idle(self) -> bool:
        return not self.assigned and not self.onboard


def od_direction(request, net) -> np.ndarray:
    a, b = net.nodes[request.origin], net.nodes[request.destination]
    vec = np.array([b.x - a.x, b.y - a.y], dtype=float)
    norm = math.hypot(vec[0], vec[1])
    return vec / norm if norm > 0 else vec


def rule1_score(view: VehicleView, request, rr, tt):
    """Insertion-compatibility score ``f`` in seconds, or EXCLUDED / RECLASSIFY_IDLE."""
    members = view.assigned | view.onboard
    m_r = len(members)
    if any(not rr(q, request.id) for q in view.onboard):
        return EXCLUDED
    m_rr = sum(1 for q in members if rr(q, request.id))
    if m_rr == 0:
        return RECLASSIFY_IDLE if m_r == 1 else EXCLUDED
    xs = (view.node,) + tuple(view.stop_nodes)
    to_origin = [tt(x, request.origin) for x in xs]
    from_dest = [tt(request.destination, x) for x in xs]
    best = min(to_origin[l] + from_dest[k] for k in range(len(xs)) for l in range(k + 1))
    return (m_r / m_rr) * best


def rule2_select(od_vec, idle, states: dict, chi_ud: int, pre_increment_weights: bool = True):
    """Pick the ``chi_ud`` idle vehicles best aligned with ``od_vec`` and pull
    their direction vectors towards it.  Picks are removed from ``idle``."""
    if chi_ud <= 0 or not idle:
        return []
    ranked = sorted(idle, key=lambda v: (-float(states[v].direction @ od_vec), v))
    picks = ranked[:chi_ud]
    for v in picks:
        st = states[v]
        w = st.n_d if pre_increment_weights else st.n_d + 1
        st.direction = (w / (w + 1)) * st.direction + (1.0 / (w + 1)) * od_vec
        st.n_d += 1
        idle.remove(v)
    return picks


def rule3_select(request, idle, states: dict, chi_un: int, tt_to_origin: dict):
    """Pick the ``chi_un`` idle vehicles with smallest ``(N_n + 1) * tt``."""
    if chi_un <= 0 or not idle:
        return []
    ranked = sorted(idle, key=lambda v: ((states[v].n_n + 1) * tt_to_origin[v], v))
    picks = ranked[:chi_un]
    for v in picks:
        states[v].n_n += 1
        idle.remove(v)
    return picks


def filter_vehicles(request, rv_candidates, views: dict, states: dict, params: FilterParams,
                    rr, tt, od_vec, fleet_size: int, pre_increment_weights: bool = True) -> set:
    """Vehicles allowed to build bundles with ``request``.

    With every count at least the fleet size the filter is the identity on
    the RV candidates.
    """
    if min(params.chi_a, params.chi_ud, params.chi_un) >= fleet_size:
        return set(rv_candidates)
    assigned_pool, idle = [], []
    for v in sorted(rv_candidates):
        (idle if views[v].is_idle else assigned_pool).append(v)
    scored = []
    for v in assigned_pool:
        f = rule1_score(views[v], request, rr, tt)
        if f == EXCLUDED:
            continue
        if f == RECLASSIFY_IDLE:
            idle.append(v)
            continue
        scored.append((f, v))
    scored.sort()
    build = {v for _, v in scored[:params.chi_a]}
    idle.sort()
    build.update(rule2_select(od_vec, idle, states, params.chi_ud, pre_increment_weights))
    tt_o = {v: tt(views[v].node, request.origin) for v in idle}
    build.update(rule3_select(request, idle, states, params.chi_un, tt_o))
    assert len(build) <= params.total, "vehicle filter exceeded its bound"
    return build
