"""Customer requests: Poisson generation from 15-minute OD slices and lifecycle."""
from __future__ import annotations

import csv
import enum
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .network import Network
from .params import Params

LOG = logging.getLogger(__name__)

SLICE_SECONDS = 900


class DemandLoadError(ValueError):
    pass


class RequestState(str, enum.Enum):
    PENDING = "pending"
    ASSIGNED = "assigned"
    ON_BOARD = "on_board"
    COMPLETED = "completed"
    REJECTED = "rejected"


_ALLOWED = {
    RequestState.PENDING: {RequestState.ASSIGNED, RequestState.REJECTED},
    RequestState.ASSIGNED: {RequestState.ON_BOARD},
    RequestState.ON_BOARD: {RequestState.COMPLETED},
    RequestState.COMPLETED: set(),
    RequestState.REJECTED: set(),
}


@dataclass(eq=False)
class Request:
    id: int
    origin: int
    destination: int
    t_r: float
    t_direct: float
    d_direct: float
    t_ep: float
    t_lp: float
    max_detour: float
    state: RequestState = RequestState.PENDING
    assigned_vehicle: int | None = None
    pickup_time: float | None = None
    dropoff_time: float | None = None
    first_step: int | None = None

    def __post_init__(self):
        if self.origin == self.destination:
            raise ValueError(f"request {self.id}: origin equals destination")
        if not self.t_ep < self.t_lp:
            raise ValueError(f"request {self.id}: t_ep must precede t_lp")
        if self.max_detour < 0:
            raise ValueError(f"request {self.id}: negative detour allowance")

    @property
    def ride_limit(self) -> float:
        """Longest admissible in-vehicle time from boarding completion to arrival."""
        return self.t_direct + self.max_detour

    def set_state(self, new: RequestState) -> None:
        if new not in _ALLOWED[self.state]:
            raise ValueError(f"request {self.id}: illegal transition {self.state.value} -> {new.value}")
        self.state = new


def make_request(rid, origin, destination, t_r, network: Network, params: Params) -> Request:
    route = network.shortest_path(origin, destination, t_r % 86400)
    return Request(
        id=rid, origin=origin, destination=destination, t_r=t_r,
        t_direct=route.travel_time, d_direct=route.distance,
        t_ep=t_r + params.minimal_waiting_time,
        t_lp=t_r + params.maximal_waiting_time,
        max_detour=params.acceptable_detour_ratio * route.travel_time,
    )


@dataclass
class ODMatrixSlice:
    start: float
    rates: dict = field(default_factory=dict)  # (origin, destination) -> expected trips per slice

    def __post_init__(self):
        if self.start % SLICE_SECONDS:
            raise ValueError(f"slice start {self.start} is not a multiple of {SLICE_SECONDS}")
        if any(v < 0 for v in self.rates.values()):
            raise ValueError("negative OD rate")
        self.rates = {k: v for k, v in self.rates.items() if v > 0}


class RequestList(list):
    """Time-ordered requests plus the number discarded during generation."""
    discarded: int = 0


def generate_requests(slices, adoption_rate: float, rng_seed, network: Network,
                      params: Params | None = None) -> RequestList:
    """Poisson requests with mean ``adoption_rate * lambda`` per OD pair and slice."""
    if adoption_rate < 0:
        raise ValueError("adoption rate must be non-negative")
    params = params or Params()
    access = set(network.access_points)
    rng = np.random.default_rng(rng_seed)
    raw = []
    for sl in sorted(slices, key=lambda s: s.start):
        for (o, d), lam in sorted(sl.rates.items()):
            if o not in access or d not in access:
                raise DemandLoadError(f"slice {sl.start}: unknown access point in pair ({o}, {d})")
            n = rng.poisson(adoption_rate * lam)
            if n:
                for t in rng.uniform(sl.start, sl.start + SLICE_SECONDS, size=n):
                    raw.append((float(t), o, d))
    raw.sort()
    out = RequestList()
    discarded = 0
    for t, o, d in raw:
        if o == d:
            discarded += 1
            continue
        _, dist = network.travel(o, d, t)
        if math.isinf(dist):
            discarded += 1
            continue
        out.append(make_request(len(out), o, d, t, network, params))
    out.discarded = discarded
    if discarded:
        LOG.info("discarded %d generated requests (same OD or unreachable)", discarded)
    return out


def load_demand(path) -> list:
    """Read ``demand.csv`` with columns slice_start_s,origin,destination,lambda."""
    by_start = defaultdict(dict)
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.DictReader(fh), start=2):
            try:
                start = float(row["slice_start_s"])
                key = (int(row["origin"]), int(row["destination"]))
                lam = float(row["lambda"])
            except (KeyError, ValueError, TypeError) as exc:
                raise DemandLoadError(f"{path}:{lineno}: {exc}") from exc
            if lam < 0:
                raise DemandLoadError(f"{path}:{lineno}: negative lambda")
            by_start[start][key] = by_start[start].get(key, 0.0) + lam
    try:
        return [ODMatrixSlice(s, r) for s, r in sorted(by_start.items())]
    except ValueError as exc:
        raise DemandLoadError(f"{path}: {exc}") from exc


def write_demand(slices, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["slice_start_s", "origin", "destination", "lambda"])
        for sl in sorted(slices, key=lambda s: s.start):
            for (o, d), lam in sorted(sl.rates.items()):
                w.writerow([int(sl.start), o, d, lam])


def synthetic_slices(network: Network, horizon: float, trips_per_hour: float, seed,
                     min_separation: float = 0.0) -> list:
    """Random OD slices over the access points (gravity-free, for desk scenarios).

    The per-slice total is ``trips_per_hour / 4`` spread over a random subset
    of OD pairs whose straight-line separation is at least ``min_separation``.
    """
    rng = np.random.default_rng(seed)
    ids = list(network.access_points)
    pairs = []
    for o in ids:
        for d in ids:
            if o == d:
                continue
            a, b = network.nodes[o], network.nodes[d]
            if math.hypot(a.x - b.x, a.y - b.y) >= min_separation:
                pairs.append((o, d))
    slices = []
    per_slice = trips_per_hour / 4.0
    for start in range(0, int(math.ceil(horizon / SLICE_SECONDS)) * SLICE_SECONDS, SLICE_SECONDS):
        w = rng.gamma(0.5, 1.0, size=len(pairs))
        w *= per_slice / w.sum()
        slices.append(ODMatrixSlice(start, {p: float(x) for p, x in zip(pairs, w)}))
    return slices


def expire_unassigned(requests, current_decision_index: int) -> list:
    """Reject pending requests already offered in an earlier decision step.

    Requests get one optimization as a grace period; those still pending at
    the next step leave the system.  Returns the rejected ids.
    """
    rejected = []
    for r in requests:
        if (r.state is RequestState.PENDING and r.first_step is not None
                and r.first_step < current_decision_index):
            r.set_state(RequestState.REJECTED)
            rejected.append(r.id)
    return rejected


REQUEST_LOG_COLUMNS = ["id", "t_r", "origin", "destination", "t_direct_s", "d_direct_m", "state",
                       "assigned_vehicle", "pickup_time_s", "dropoff_time_s"]


def write_request_log(requests, path) -> None:
    def fmt(v):
        return "" if v is None else repr(float(v))

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(REQUEST_LOG_COLUMNS)
        for r in sorted(requests, key=lambda r: r.id):
            w.writerow([r.id, repr(float(r.t_r)), r.origin, r.destination, repr(float(r.t_direct)),
                        repr(float(r.d_direct)), r.state.value,
                        "" if r.assigned_vehicle is None else r.assigned_vehicle,
                        fmt(r.pickup_time), fmt(r.dropoff_time)])


def read_request_log(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
