"""Simulation constants (case-study defaults, SI units)."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Params:
    simulation_time_step: float = 1.0            # seconds
    time_between_decision_time_steps: float = 30.0
    boarding_time: float = 30.0
    minimal_waiting_time: float = 120.0
    maximal_waiting_time: float = 480.0
    acceptable_detour_ratio: float = 0.4
    vehicle_capacity: int = 4
    penalty_for_not_assigned_request: float = 40_000_000.0  # meters
    solver_timeout: float = 20.0

    def __post_init__(self):
        for name in ("simulation_time_step", "time_between_decision_time_steps",
                     "boarding_time", "maximal_waiting_time", "solver_timeout"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.minimal_waiting_time < 0 or self.acceptable_detour_ratio < 0:
            raise ValueError("waiting time and detour ratio must be non-negative")
        if self.minimal_waiting_time >= self.maximal_waiting_time:
            raise ValueError("minimal_waiting_time must be below maximal_waiting_time")
        if self.vehicle_capacity < 1:
            raise ValueError("vehicle_capacity must be >= 1")

    # short aliases used in the hot paths
    @property
    def T_B(self) -> float:
        return self.boarding_time

    @property
    def P(self) -> float:
        return self.penalty_for_not_assigned_request
