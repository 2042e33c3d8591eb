"""Discrete clock, vehicle motion and decision-step orchestration."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .demand import RequestState, expire_unassigned
from .network import Network
from .params import Params
from .vehicle import SimulationInvariantError, Vehicle
from .vehicle_filter import VehicleHeuristicState

LOG = logging.getLogger(__name__)

EVENT_COLUMNS = ["t", "event_type", "vehicle", "request", "node"]


@dataclass
class StepTiming:
    step: int
    t: float
    rr_rv_s: float = 0.0
    build_s: float = 0.0
    solve_s: float = 0.0
    n_new: int = 0
    n_v2rb: int = 0
    status: str = ""


class Simulation:
    def __init__(self, net: Network, requests, fleet_size: int, policy, params: Params | None = None,
                 seed: int = 0, horizon: float = 86400.0, initial_nodes=None):
        self.net = net
        self.params = params or Params()
        self.requests = {r.id: r for r in requests}
        self.request_list = sorted(requests, key=lambda r: (r.t_r, r.id))
        ids = [r.id for r in self.request_list]
        if ids != sorted(ids):
            raise ValueError("request ids must increase with request time")
        self.policy = policy
        self.seed = seed
        self.horizon = horizon
        if fleet_size < 1:
            raise ValueError("fleet size must be >= 1")
        if initial_nodes is None:
            rng = np.random.default_rng([seed, 3])
            access = list(net.access_points)
            initial_nodes = [access[i] for i in rng.integers(0, len(access), size=fleet_size)]
        hrng = np.random.default_rng([seed, 11])
        self.vehicles = [Vehicle(i, int(n), self.params.vehicle_capacity,
                                 VehicleHeuristicState.random(hrng))
                         for i, n in enumerate(initial_nodes)]
        self.events = []
        self.timings = []
        self.now = 0.0
        self._next_request = 0
        self.max_occupancy_seen = 0

    def log(self, t, kind, vehicle, request, node):
        self.events.append((t, kind, vehicle, request, node))

    def step(self, dt: float) -> None:
        """Advance the clock by ``dt`` and execute all due vehicle actions."""
        self.now += dt
        for v in self.vehicles:
            if v.next_action_time() <= self.now:
                v.advance(self.now, self)
            if len(v.onboard) > v.capacity:
                raise SimulationInvariantError(f"vehicle {v.id} over capacity")
            self.max_occupancy_seen = max(self.max_occupancy_seen, len(v.onboard))

    def anchors(self):
        return {v.id: v.anchor(self.now) for v in self.vehicles}

    def decision_step(self, step: int):
        dec = self.params.time_between_decision_time_steps
        new = []
        while (self._next_request < len(self.request_list)
               and self.request_list[self._next_request].t_r < self.now):
            r = self.request_list[self._next_request]
            self._next_request += 1
            if self.now - r.t_r > dec + 1e-9:
                raise SimulationInvariantError(f"request {r.id} missed its decision step")
            r.first_step = step
            new.append(r)
        timing = self.policy.decide(self, step, self.now, new, self.anchors())
        for rid in expire_unassigned(self.request_list[:self._next_request], step):
            self.log(self.now, "reject", None, rid, self.requests[rid].origin)
        self.timings.append(timing)
        return timing

    def run(self):
        dt = self.params.simulation_time_step
        dec = self.params.time_between_decision_time_steps
        n_steps = int(round(self.horizon / dec))
        ticks_per_step = int(round(dec / dt))
        for k in range(1, n_steps + 1):
            base = (k - 1) * dec
            for j in range(1, ticks_per_step + 1):
                self.now = base + (j - 1) * dt
                self.step(dt)
            self.now = k * dec
            self.decision_step(k)
        # drain: no further decisions, vehicles finish their plans
        for rid in expire_unassigned(self.request_list, n_steps + 1):
            self.log(self.now, "reject", None, rid, self.requests[rid].origin)
        while any(v.is_busy() for v in self.vehicles):
            self.step(dt)
        self.check_conservation()
        return self

    def check_conservation(self):
        counts = {s: 0 for s in RequestState}
        for r in self.request_list:
            counts[r.state] += 1
        if sum(counts.values()) != len(self.request_list):
            raise SimulationInvariantError("request conservation violated")
        return counts
