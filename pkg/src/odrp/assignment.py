"""Decision-step assignment: pick at most one bundle per vehicle.

Maximises ``sum(u'_jk z_jk)`` with ``u'_jk = u_jk + P * |k & R_u|`` (the
unassigned-request slack variables folded into the utilities), subject to:
every unassigned request covered at most once, every previously assigned
request covered exactly once, and at most one bundle per vehicle.

The default backend is the HiGHS MILP solver (through scipy) on the
equivalent matrix form, run with a zero optimality gap.  An independent
exact depth-first branch and bound over vehicles, run per connected
component of the vehicle/request conflict graph, is kept for cross-checks
and as the timeout fallback.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

LOG = logging.getLogger(__name__)

OPTIMAL = "optimal"
INCUMBENT_TIMEOUT = "incumbent_timeout"


class InfeasibleAssignmentError(RuntimeError):
    """An assigned request cannot be covered; indicates a database defect."""


@dataclass(frozen=True)
class Candidate:
    vehicle: int
    bundle: tuple
    utility: float


@dataclass
class AssignmentProblem:
    candidates: list
    unassigned: frozenset
    assigned: frozenset
    penalty: float = 40_000_000.0

    def __post_init__(self):
        self.unassigned = frozenset(self.unassigned)
        self.assigned = frozenset(self.assigned)
        if self.unassigned & self.assigned:
            raise ValueError("a request cannot be both assigned and unassigned")
        covered = set()
        for c in self.candidates:
            covered.update(c.bundle)
        missing = self.assigned - covered
        if missing:
            raise InfeasibleAssignmentError(f"assigned requests without candidate: {sorted(missing)}")

    def adjusted(self, c: Candidate) -> float:
        return c.utility + self.penalty * len(self.unassigned.intersection(c.bundle))


@dataclass
class AssignmentSolution:
    chosen: list
    served: frozenset
    objective: float
    status: str = OPTIMAL
    nodes: int = 0

    def by_vehicle(self) -> dict:
        return {c.vehicle: c for c in self.chosen}


def check_solution(problem: AssignmentProblem, chosen) -> list:
    """Violations of the one-bundle-per-vehicle and coverage constraints."""
    errors = []
    vehicles = [c.vehicle for c in chosen]
    if len(vehicles) != len(set(vehicles)):
        errors.append("vehicle used more than once")
    counts = {}
    for c in chosen:
        for r in c.bundle:
            counts[r] = counts.get(r, 0) + 1
    for r in problem.unassigned:
        if counts.get(r, 0) > 1:
            errors.append(f"unassigned request {r} covered {counts[r]} times")
    for r in problem.assigned:
        if counts.get(r, 0) != 1:
            errors.append(f"assigned request {r} covered {counts.get(r, 0)} times")
    cand = set(problem.candidates)
    for c in chosen:
        if c not in cand:
            errors.append(f"chosen pair {c} is not a candidate")
    return errors


def _components(problem):
    parent = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    owner = {}
    for c in problem.candidates:
        parent.setdefault(c.vehicle, c.vehicle)
        for r in c.bundle:
            if r in owner:
                a, b = find(owner[r]), find(c.vehicle)
                if a != b:
                    parent[max(a, b)] = min(a, b)
            else:
                owner[r] = c.vehicle
    groups = {}
    for c in problem.candidates:
        groups.setdefault(find(c.vehicle), []).append(c)
    return [groups[k] for k in sorted(groups)]


class _Timeout(Exception):
    pass


class _ComponentSearch:
    def __init__(self, problem, cands, deadline):
        self.problem = problem
        self.deadline = deadline
        rids = sorted({r for c in cands for r in c.bundle})
        bit = {r: 1 << i for i, r in enumerate(rids)}
        self.ra_mask = sum(bit[r] for r in rids if r in problem.assigned)
        self.ru_mask = sum(bit[r] for r in rids if r in problem.unassigned)
        by_v = {}
        for c in cands:
            m = 0
            for r in c.bundle:
                m |= bit[r]
            by_v.setdefault(c.vehicle, []).append((problem.adjusted(c), c.utility, m, c))
        self.vehicles = sorted(by_v)
        self.options = [sorted(by_v[v], key=lambda o: (-o[0], o[3].bundle)) for v in self.vehicles]
        n = len(self.vehicles)
        self.reach = [0] * (n + 1)
        for i in range(n - 1, -1, -1):
            m = self.reach[i + 1]
            for o in self.options[i]:
                m |= o[2]
            self.reach[i] = m
        self.best_value = -np.inf
        self.best = None
        self.nodes = 0
        self.P = problem.penalty

    def greedy(self):
        flat = sorted(((o, i) for i, opts in enumerate(self.options) for o in opts),
                      key=lambda x: (-x[0][0], self.vehicles[x[1]], x[0][3].bundle))
        used, covered, value, chosen = set(), 0, 0.0, []
        for o, i in flat:
            if i in used or o[2] & covered or o[0] <= 0 and not (o[2] & self.ra_mask & ~covered):
                continue
            used.add(i)
            covered |= o[2]
            value += o[0]
            chosen.append(o[3])
        if covered & self.ra_mask == self.ra_mask:
            self.best_value, self.best = value, chosen

    def bound(self, i, covered):
        b1 = 0.0
        b2u = 0.0
        for opts in self.options[i:]:
            bu, bp = 0.0, 0.0
            for adj, u, m, _ in opts:
                if m & covered:
                    continue
                if adj > bp:
                    bp = adj
                if u > bu:
                    bu = u
            b1 += bp
            b2u += bu
        open_ru = bin(self.ru_mask & ~covered & self.reach[i]).count("1")
        return min(b1, b2u + self.P * open_ru)

    def seed(self, incumbent):
        """Take a known feasible selection (e.g. every vehicle keeps its plan) as incumbent."""
        idx = {v: i for i, v in enumerate(self.vehicles)}
        covered, value, chosen = 0, 0.0, []
        for c in incumbent:
            if c.vehicle not in idx:
                continue
            o = next((o for o in self.options[idx[c.vehicle]] if o[3] == c), None)
            if o is None or o[2] & covered:
                return
            covered |= o[2]
            value += o[0]
            chosen.append(c)
        if covered & self.ra_mask == self.ra_mask and value > self.best_value:
            self.best_value, self.best = value, chosen

    def run(self, incumbent=()):
        self.greedy()
        self.seed(incumbent)
        self._dfs(0, 0, 0.0, [])

    def _dfs(self, i, covered, value, chosen):
        self.nodes += 1
        if self.nodes & 1023 == 0 and time.perf_counter() > self.deadline:
            raise _Timeout
        if i == len(self.vehicles):
            if covered & self.ra_mask == self.ra_mask and value > self.best_value:
                self.best_value, self.best = value, list(chosen)
            return
        missing = self.ra_mask & ~covered
        if missing & ~self.reach[i]:
            return
        if self.best is not None and value + self.bound(i, covered) <= self.best_value:
            return
        for adj, u, m, c in self.options[i]:
            if m & covered:
                continue
            chosen.append(c)
            self._dfs(i + 1, covered | m, value + adj, chosen)
            chosen.pop()
        self._dfs(i + 1, covered, value, chosen)


def solve(problem: AssignmentProblem, timeout_s: float = 20.0, backend: str = "highs",
          incumbent=()) -> AssignmentSolution:
    """Exact assignment; on timeout the best incumbent is returned and flagged.

    ``backend`` is ``"highs"`` (MILP via scipy) or ``"bnb"`` (the internal
    branch and bound).  ``incumbent`` is an optional feasible list of
    candidates used as a fallback / starting solution.
    """
    if backend == "highs":
        return solve_highs(problem, timeout_s, incumbent)
    if backend != "bnb":
        raise ValueError(f"unknown backend {backend!r}")
    return solve_bnb(problem, timeout_s, incumbent)


def solve_bnb(problem: AssignmentProblem, timeout_s: float = 20.0, incumbent=()) -> AssignmentSolution:
    deadline = time.perf_counter() + timeout_s
    chosen, status, nodes = [], OPTIMAL, 0
    for cands in _components(problem):
        search = _ComponentSearch(problem, cands, deadline)
        try:
            search.run(incumbent)
        except _Timeout:
            status = INCUMBENT_TIMEOUT
        nodes += search.nodes
        if search.best is None:
            raise InfeasibleAssignmentError("no assignment covers all assigned requests")
        chosen.extend(search.best)
    return _solution(problem, chosen, status, nodes)


def _solution(problem, chosen, status, nodes=0):
    chosen = sorted(chosen, key=lambda c: c.vehicle)
    served = frozenset(r for c in chosen for r in c.bundle if r in problem.unassigned)
    objective = sum(problem.adjusted(c) for c in chosen)
    return AssignmentSolution(chosen, served, objective, status, nodes)


def matrix_form(problem: AssignmentProblem):
    """``(c, A, lb, ub)`` with ``lb <= A z <= ub``; rows: vehicles, R_u, R_a."""
    cands = list(problem.candidates)
    vehicles = sorted({c.vehicle for c in cands})
    reqs = sorted(problem.unassigned | problem.assigned)
    rows = {("v", v): i for i, v in enumerate(vehicles)}
    for r in reqs:
        rows[("r", r)] = len(rows)
    A = np.zeros((len(rows), len(cands)))
    for j, c in enumerate(cands):
        A[rows[("v", c.vehicle)], j] = 1
        for r in c.bundle:
            if ("r", r) in rows:
                A[rows[("r", r)], j] = 1
    lb = np.zeros(len(rows))
    ub = np.ones(len(rows))
    for r in problem.assigned:
        lb[rows[("r", r)]] = 1
    c = np.array([problem.adjusted(x) for x in cands])
    return c, A, lb, ub


def solve_highs(problem: AssignmentProblem, timeout_s: float = 20.0, incumbent=()) -> AssignmentSolution:
    from scipy.optimize import Bounds, LinearConstraint, milp

    cands = list(problem.candidates)
    if not cands:
        return AssignmentSolution([], frozenset(), 0.0)
    c, A, lb, ub = matrix_form(problem)
    # the default relative gap (1e-4) is far too loose once P enters the objective
    res = milp(-c, constraints=LinearConstraint(A, lb, ub), integrality=np.ones(len(cands)),
               bounds=Bounds(0, 1),
               options={"time_limit": max(timeout_s, 1e-3), "mip_rel_gap": 0.0})
    if res.status == 2:
        raise InfeasibleAssignmentError(res.message)
    if res.x is None:
        # time limit without a MILP solution: greedy / supplied incumbent only
        sol = solve_bnb(problem, 0.0, incumbent)
        sol.status = INCUMBENT_TIMEOUT
        return sol
    chosen = [cands[j] for j in np.flatnonzero(res.x > 0.5)]
    errors = check_solution(problem, chosen)
    if errors:
        raise InfeasibleAssignmentError("; ".join(errors))
    return _solution(problem, chosen, OPTIMAL if res.status == 0 else INCUMBENT_TIMEOUT)
