import math

import numpy as np
import pytest

from odrp.demand import make_request
from odrp.network import grid_network, line_network
from odrp.params import Params
from odrp.vehicle_filter import (EXCLUDED, RECLASSIFY_IDLE, FilterParams, VehicleHeuristicState,
                                 VehicleView, filter_vehicles, od_direction, rule1_score,
                                 rule2_select, rule3_select)


def state(x, y, n_d=0, n_n=0):
    return VehicleHeuristicState(np.array([x, y], dtype=float), n_d, n_n)


def always(a, b):
    return True


def test_parse():
    assert FilterParams.parse("off") is None
    assert FilterParams.parse("2,1,3") == FilterParams(2, 1, 3)
    assert FilterParams.parse("(2, 1, 3)").total == 6
    with pytest.raises(ValueError):
        FilterParams.parse("1,2")
    with pytest.raises(ValueError):
        FilterParams(-1, 0, 0)


def test_random_state_is_unit():
    rng = np.random.default_rng(0)
    for _ in range(20):
        s = VehicleHeuristicState.random(rng)
        assert np.linalg.norm(s.direction) == pytest.approx(1.0)
        assert s.n_d == s.n_n == 0


def test_identity_when_unconstrained(params):
    net = line_network(4)
    r = make_request(1, 0, 2, 0.0, net, params)
    views = {v: VehicleView(v, v % 4) for v in range(3)}
    states = {v: state(1, 0) for v in range(3)}
    got = filter_vehicles(r, {0, 2}, views, states, FilterParams(3, 3, 3), always,
                          lambda a, b: 60.0 * abs(a - b), od_direction(r, net), 3)
    assert got == {0, 2}
    assert all(s.n_d == 0 and s.n_n == 0 for s in states.values())


def test_nearest_idle_vehicle(params):
    net = line_network(4)
    r = make_request(1, 0, 3, 0.0, net, params)
    views = {0: VehicleView(0, 2), 1: VehicleView(1, 1)}
    states = {0: state(1, 0), 1: state(1, 0)}
    got = filter_vehicles(r, {0, 1}, views, states, FilterParams(0, 0, 1), always,
                          lambda a, b: 60.0 * abs(a - b), od_direction(r, net), 5)
    assert got == {1} and states[1].n_n == 1 and states[0].n_n == 0


def test_rule1_zero_when_route_passes_request(params):
    net = line_network(4)
    r = make_request(9, 1, 2, 0.0, net, params)
    view = VehicleView(0, 0, (3,), frozenset({5}))
    f = rule1_score(view, r, always, lambda a, b: 60.0 * abs(a - b))
    # pick-up after the current position, drop-off before the stop at n3: 60 + 60
    assert f == 120.0
    view = VehicleView(0, 1, (2,), frozenset({5}))
    assert rule1_score(view, r, always, lambda a, b: 60.0 * abs(a - b)) == 0.0


def test_rule1_weighting_and_exclusions(params):
    net = line_network(4)
    r = make_request(9, 0, 1, 0.0, net, params)
    compat = {(1, 9)}

    def rr(a, b):
        return (min(a, b), max(a, b)) in compat

    view = VehicleView(0, 0, (), frozenset({1, 2, 3}))
    assert rule1_score(view, r, rr, lambda a, b: 50.0) == 3 * 100.0
    assert rule1_score(VehicleView(0, 0, (), frozenset({2})), r, rr, lambda a, b: 1.0) == RECLASSIFY_IDLE
    assert rule1_score(VehicleView(0, 0, (), frozenset({2, 3})), r, rr, lambda a, b: 1.0) == EXCLUDED
    onboard = VehicleView(0, 0, (), frozenset({1}), frozenset({2}))
    assert rule1_score(onboard, r, rr, lambda a, b: 1.0) == EXCLUDED


def test_rule2_first_update_overwrites_direction():
    od = np.array([0.0, 1.0])
    states = {0: state(1, 0)}
    picks = rule2_select(od, [0], states, 1)
    assert picks == [0] and states[0].n_d == 1
    assert np.allclose(states[0].direction, od)


def test_rule2_post_increment_switch():
    od = np.array([0.0, 1.0])
    states = {0: state(1, 0)}
    rule2_select(od, [0], states, 1, pre_increment_weights=False)
    assert np.allclose(states[0].direction, [0.5, 0.5])


def test_rule2_alignment_and_convergence():
    states = {0: state(1, 0), 1: state(-1, 0)}
    idle = [0, 1]
    assert rule2_select(np.array([1.0, 0.0]), idle, states, 1) == [0]
    assert idle == [1]
    s = {0: state(0, 1)}
    od = np.array([math.cos(0.3), math.sin(0.3)])
    for _ in range(50):
        rule2_select(od, [0], s, 1, pre_increment_weights=False)
        assert np.linalg.norm(s[0].direction) <= 1.0 + 1e-12
    assert np.allclose(s[0].direction, od, atol=0.05)


def test_rule3_weighted_by_added_requests():
    states = {0: state(1, 0, n_n=1), 1: state(1, 0)}
    idle = [0, 1]
    picks = rule3_select(None, idle, states, 1, {0: 100.0, 1: 150.0})
    assert picks == [1] and states[1].n_n == 1
    states = {v: state(1, 0) for v in range(3)}
    assert rule3_select(None, [0, 1, 2], states, 5, {0: 3.0, 1: 1.0, 2: 2.0}) == [1, 2, 0]


def reference_filter(request, rv, views, states, params, rr, tt, od):
    """Straight transcription of the three rules, used as an independent check."""
    if min(params.chi_a, params.chi_ud, params.chi_un) >= len(views):
        return set(rv)
    idle = [v for v in sorted(rv) if not views[v].assigned and not views[v].onboard]
    scored = []
    for v in sorted(rv):
        vw = views[v]
        if not vw.assigned and not vw.onboard:
            continue
        members = list(vw.assigned | vw.onboard)
        if not all(rr(q, request.id) for q in vw.onboard):
            continue
        m_rr = len([q for q in members if rr(q, request.id)])
        if m_rr == 0:
            if len(members) == 1:
                idle.append(v)
            continue
        xs = [vw.node, *vw.stop_nodes]
        best = math.inf
        for k in range(len(xs)):
            for l in range(k + 1):
                best = min(best, tt(xs[l], request.origin) + tt(request.destination, xs[k]))
        scored.append((len(members) / m_rr * best, v))
    chosen = {v for _, v in sorted(scored)[:params.chi_a]}
    idle = sorted(idle)
    s2 = sorted(idle, key=lambda v: (-(states[v].direction[0] * od[0] + states[v].direction[1] * od[1]), v))
    for v in s2[:params.chi_ud]:
        n = states[v].n_d
        states[v].direction = n / (n + 1) * states[v].direction + od / (n + 1)
        states[v].n_d = n + 1
        chosen.add(v)
        idle.remove(v)
    s3 = sorted(idle, key=lambda v: ((states[v].n_n + 1) * tt(views[v].node, request.origin), v))
    for v in s3[:params.chi_un]:
        states[v].n_n += 1
        chosen.add(v)
    return chosen


def test_matches_reference_on_random_fleets():
    p = Params()
    for seed in range(25):
        rng = np.random.default_rng(seed)
        net = grid_network(5, 5, spacing=300, travel_time=40)
        reqs = []
        for i in range(10):
            o, d = rng.choice(25, size=2, replace=False)
            reqs.append(make_request(i, int(o), int(d), 0.0, net, p))
        views = {}
        for v in range(10):
            kind = rng.integers(3)
            members = frozenset(int(x) for x in rng.choice(100, size=int(rng.integers(1, 4)), replace=False) + 100)
            stops = tuple(int(x) for x in rng.choice(25, size=int(rng.integers(0, 3))))
            if kind == 0:
                views[v] = VehicleView(v, int(rng.integers(25)))
            elif kind == 1:
                views[v] = VehicleView(v, int(rng.integers(25)), stops, members)
            else:
                on = frozenset(list(members)[:1])
                views[v] = VehicleView(v, int(rng.integers(25)), stops, members - on, on)
        salt = int(rng.integers(1 << 30))

        def rr(a, b):
            return (a * 7919 + b * 104729 + salt) % 3 != 0

        def tt(a, b):
            return net.travel(a, b, 0)[0]

        fp = FilterParams(*(int(x) for x in rng.integers(0, 4, size=3)))
        s_a = {v: VehicleHeuristicState.random(np.random.default_rng([seed, v])) for v in views}
        s_b = {v: VehicleHeuristicState.random(np.random.default_rng([seed, v])) for v in views}
        for r in reqs:
            rv = {v for v in views if rng.random() < 0.8}
            od = od_direction(r, net)
            got = filter_vehicles(r, rv, views, s_a, fp, rr, tt, od, len(views))
            want = reference_filter(r, rv, views, s_b, fp, rr, tt, od)
            assert got == want
            assert len(got) <= fp.total
            for v in views:
                assert np.allclose(s_a[v].direction, s_b[v].direction)
                assert (s_a[v].n_d, s_a[v].n_n) == (s_b[v].n_d, s_b[v].n_n)
