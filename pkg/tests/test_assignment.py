import itertools

import numpy as np
import pytest

from odrp.assignment import (INCUMBENT_TIMEOUT, OPTIMAL, AssignmentProblem, Candidate,
                             InfeasibleAssignmentError, check_solution, matrix_form, solve)


def enumerate_best(problem):
    """Best feasible subset of candidates by brute force: (objective, served count)."""
    best = None
    cands = problem.candidates
    for k in range(len(cands) + 1):
        for sub in itertools.combinations(cands, k):
            if check_solution(problem, list(sub)):
                continue
            val = sum(problem.adjusted(c) for c in sub)
            served = len({r for c in sub for r in c.bundle} & problem.unassigned)
            if best is None or val > best[0]:
                best = (val, served)
    return best


def random_problem(rng, n_cand=None, big_penalty=True):
    n_veh = int(rng.integers(1, 5))
    n_req = int(rng.integers(1, 7))
    n_cand = n_cand or int(rng.integers(1, 13))
    cands = set()
    for _ in range(n_cand):
        v = int(rng.integers(n_veh))
        size = int(rng.integers(1, min(3, n_req) + 1))
        bundle = tuple(sorted(int(x) for x in rng.choice(n_req, size=size, replace=False)))
        cands.add((v, bundle))
    cands = [Candidate(v, b, float(rng.integers(-3000, 3000))) for v, b in sorted(cands)]
    covered = sorted({r for c in cands for r in c.bundle})
    # R_a must be coverable: take the requests of one random disjoint selection
    assigned = set()
    used_v = set()
    for c in rng.permutation(len(cands)):
        c = cands[c]
        if c.vehicle in used_v or assigned & set(c.bundle) or rng.random() < 0.5:
            continue
        used_v.add(c.vehicle)
        assigned |= set(c.bundle)
    unassigned = set(covered) - assigned
    penalty = 1e7 if big_penalty else float(rng.integers(0, 2000))
    return AssignmentProblem(cands, frozenset(unassigned), frozenset(assigned), penalty)


def test_single_candidate():
    prob = AssignmentProblem([Candidate(0, (1,), 250.0)], {1}, set(), 40e6)
    sol = solve(prob)
    assert [c.bundle for c in sol.chosen] == [(1,)]
    assert sol.objective == 250.0 + 40e6 and sol.served == {1} and sol.status == OPTIMAL


def test_two_vehicle_pooling_example():
    for u_pair, u_a2, u_b1 in [(900.0, 100.0, 200.0), (100.0, 600.0, 700.0), (-50.0, -500.0, -10.0)]:
        cands = [Candidate(0, (1,), 0.0), Candidate(0, (2,), u_a2), Candidate(0, (1, 2), u_pair),
                 Candidate(1, (1,), u_b1)]
        prob = AssignmentProblem(cands, {1, 2}, set(), 1e7)
        sol = solve(prob)
        want = enumerate_best(prob)
        assert sol.objective == want[0] and len(sol.served) == 2
        chosen = {(c.vehicle, c.bundle) for c in sol.chosen}
        assert chosen in ({(0, (1, 2))}, {(0, (2,)), (1, (1,))})


def test_assigned_request_keeps_its_only_candidate():
    cands = [Candidate(0, (5,), -9000.0), Candidate(1, (6,), 10.0), Candidate(0, (6,), 5000.0)]
    prob = AssignmentProblem(cands, {6}, {5}, 40e6)
    sol = solve(prob)
    assert {(c.vehicle, c.bundle) for c in sol.chosen} == {(0, (5,)), (1, (6,))}


def test_uncoverable_assigned_request():
    with pytest.raises(InfeasibleAssignmentError):
        AssignmentProblem([Candidate(0, (1,), 0.0)], set(), {2})
    # coverable individually but not jointly: both need vehicle 0
    prob = AssignmentProblem([Candidate(0, (1,), 0.0), Candidate(0, (2,), 0.0)], set(), {1, 2})
    with pytest.raises(InfeasibleAssignmentError):
        solve(prob)


def test_empty_problem():
    sol = solve(AssignmentProblem([], set(), set()))
    assert sol.chosen == [] and sol.objective == 0


def test_backends_match_enumeration():
    rng = np.random.default_rng(11)
    for _ in range(150):
        prob = random_problem(rng, big_penalty=bool(rng.integers(2)))
        sol = solve(prob, backend="bnb")
        assert check_solution(prob, sol.chosen) == []
        assert sol.objective == pytest.approx(enumerate_best(prob)[0], abs=1e-6)
        hi = solve(prob)
        assert check_solution(prob, hi.chosen) == []
        assert hi.objective == pytest.approx(sol.objective, abs=1e-6)


def test_scaling_invariance():
    rng = np.random.default_rng(5)
    for _ in range(60):
        prob = random_problem(rng)
        scaled = AssignmentProblem([Candidate(c.vehicle, c.bundle, 3.5 * c.utility)
                                    for c in prob.candidates], prob.unassigned, prob.assigned,
                                   3.5 * prob.penalty)
        a, b = solve(prob), solve(scaled)
        assert b.objective == pytest.approx(3.5 * a.objective)


def test_matrix_form_rows():
    prob = AssignmentProblem([Candidate(0, (1, 2), 5.0), Candidate(1, (2,), 1.0)], {1}, {2}, 10.0)
    c, A, lb, ub = matrix_form(prob)
    assert list(c) == [15.0, 1.0]
    assert A.shape == (4, 2)
    assert list(lb) == [0, 0, 0, 1] and list(ub) == [1, 1, 1, 1]


def test_timeout_returns_valid_incumbent():
    rng = np.random.default_rng(3)
    cands = []
    for v in range(25):
        for _ in range(30):
            b = tuple(sorted(int(x) for x in rng.choice(60, size=2, replace=False)))
            cands.append(Candidate(v, b, float(rng.integers(-500, 500))))
    cands = list({(c.vehicle, c.bundle): c for c in cands}.values())
    prob = AssignmentProblem(cands, frozenset(range(60)), frozenset(), 40e6)
    sol = solve(prob, timeout_s=0.0, backend="bnb")
    assert sol.status == INCUMBENT_TIMEOUT
    assert check_solution(prob, sol.chosen) == []
    assert sol.served


def test_highs_without_solution_falls_back(monkeypatch):
    import scipy.optimize

    class NoX:
        status, x, message = 1, None, "time limit"

    monkeypatch.setattr(scipy.optimize, "milp", lambda *a, **k: NoX())
    prob = AssignmentProblem([Candidate(0, (1,), 5.0), Candidate(0, (2,), 9.0),
                              Candidate(1, (2,), 1.0)], {2}, {1}, 100.0)
    keep = [Candidate(0, (1,), 5.0)]
    sol = solve(prob, timeout_s=0.0, incumbent=keep)
    assert sol.status == INCUMBENT_TIMEOUT and check_solution(prob, sol.chosen) == []
    assert 1 in {r for c in sol.chosen for r in c.bundle}


def test_gap_is_zero_at_large_penalty():
    # objective differences of 1 m on top of 1e8 must still be resolved
    rng = np.random.default_rng(9)
    cands = []
    for v in range(6):
        for r in range(8):
            cands.append(Candidate(v, (r,), float(rng.integers(-3, 3))))
    prob = AssignmentProblem(cands, frozenset(range(8)), frozenset(), 4e7)
    assert solve(prob).objective == solve(prob, backend="bnb").objective
