"""Scenario configuration, KPI computation and report files."""
from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .demand import (RequestState, generate_requests, load_demand, synthetic_slices,
                     write_request_log)
from .insertion import InsertionPolicy
from .network import grid_network, load_network
from .params import Params
from .simulation import EVENT_COLUMNS, Simulation
from .v2rb_policy import V2RBPolicy
from .vehicle_filter import FilterParams

NA = "NA"
TIMING_COLUMNS = ["step", "t", "rr_rv_s", "build_s", "solve_s"]


class ConfigError(ValueError):
    pass


_PARAM_FIELDS = {f.name: f.type for f in dataclasses.fields(Params)}


@dataclass
class ScenarioConfig:
    """Flat ``key = value`` scenario description.

    The network comes either from ``nodes``/``edges`` CSV paths or from a
    synthetic ``grid = ROWSxCOLS``; demand either from a ``demand`` CSV or
    from ``synthetic_trips_per_hour``.  Relative paths resolve against the
    config file's directory.
    """
    nodes: Path | None = None
    edges: Path | None = None
    grid: tuple | None = None
    grid_spacing: float = 500.0
    grid_travel_time: float = 60.0
    demand: Path | None = None
    synthetic_trips_per_hour: float = 0.0
    synthetic_min_separation: float = 0.0
    adoption_rate: float = 1.0
    fleet_size: int = 1
    policy: str = "v2rb"
    heuristic: FilterParams | None = None
    seed: int = 0
    horizon: float = 86400.0
    params: Params = field(default_factory=Params)

    def __post_init__(self):
        if self.adoption_rate < 0:
            raise ConfigError("adoption_rate must be >= 0")
        if self.fleet_size < 1:
            raise ConfigError("fleet_size must be >= 1")
        if self.horizon <= 0:
            raise ConfigError("horizon must be positive")
        if self.policy not in ("insertion", "v2rb"):
            raise ConfigError(f"unknown policy {self.policy!r}")
        if (self.nodes is None) != (self.edges is None):
            raise ConfigError("nodes and edges must be given together")
        if self.nodes is None and self.grid is None:
            raise ConfigError("need nodes/edges or grid")

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        path = Path(path)
        base = path.parent
        kw, params = {}, {}
        try:
            lines = path.read_text().splitlines()
        except OSError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        for lineno, raw in enumerate(lines, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            try:
                if key in _PARAM_FIELDS:
                    params[key] = int(value) if key == "vehicle_capacity" else float(value)
                elif key in ("nodes", "edges", "demand"):
                    kw[key] = base / value
                elif key == "grid":
                    r, c = value.lower().split("x")
                    kw[key] = (int(r), int(c))
                elif key in ("fleet_size", "seed"):
                    kw[key] = int(value)
                elif key == "policy":
                    kw[key] = value
                elif key == "heuristic":
                    kw[key] = FilterParams.parse(value)
                elif key in ("grid_spacing", "grid_travel_time", "synthetic_trips_per_hour",
                             "synthetic_min_separation", "adoption_rate", "horizon"):
                    kw[key] = float(value)
                else:
                    raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            except ConfigError:
                raise
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {key}: {exc}") from exc
        try:
            return cls(params=Params(**params), **kw)
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from exc

    def network(self):
        if self.nodes is not None:
            return load_network(self.nodes, self.edges)
        return grid_network(*self.grid, spacing=self.grid_spacing, travel_time=self.grid_travel_time)

    def slices(self, net):
        if self.demand is not None:
            return load_demand(self.demand)
        return synthetic_slices(net, self.horizon, self.synthetic_trips_per_hour, [self.seed, 5],
                                self.synthetic_min_separation)


def compute_rsd(direct_distances, odometers):
    """Relative saved distance over served requests and the whole fleet; NA without service."""
    total = math.fsum(direct_distances)
    if total <= 0:
        return NA
    return (total - math.fsum(odometers)) / total


@dataclass
class KPIReport:
    name: str
    n_requests: int
    n_served: int
    n_rejected: int
    served_share: object
    rsd: object
    vmt_m: float
    mean_wait_s: object
    mean_ride_ratio: object
    max_occupancy: int
    timings: list = field(default_factory=list)

    def kpi_rows(self):
        def f(v):
            return v if v == NA else repr(float(v))
        return [("n_requests", self.n_requests), ("n_served", self.n_served),
                ("n_rejected", self.n_rejected), ("served_share", f(self.served_share)),
                ("rsd", f(self.rsd)), ("vmt_m", f(self.vmt_m)),
                ("mean_wait_s", f(self.mean_wait_s)), ("mean_ride_ratio", f(self.mean_ride_ratio)),
                ("max_occupancy", self.max_occupancy)]

    def phase_stats(self):
        """Mean and 95th percentile wall time per phase."""
        out = {}
        for col in ("rr_rv_s", "build_s", "solve_s"):
            vals = np.array([row[col] for row in self.timings], dtype=float)
            out[col] = (float(vals.mean()) if len(vals) else 0.0,
                        float(np.percentile(vals, 95)) if len(vals) else 0.0)
        return out


def report_from_simulation(sim: Simulation, name: str = "") -> KPIReport:
    reqs = sim.request_list
    served = [r for r in reqs if r.state is RequestState.COMPLETED]
    rejected = sum(r.state is RequestState.REJECTED for r in reqs)
    n = len(reqs)
    waits = [r.pickup_time - r.t_r for r in served]
    ratios = [(r.dropoff_time - r.pickup_time) / r.t_direct for r in served if r.t_direct > 0]
    return KPIReport(
        name=name, n_requests=n, n_served=len(served), n_rejected=rejected,
        served_share=len(served) / n if n else NA,
        rsd=compute_rsd([r.d_direct for r in served], [v.odometer for v in sim.vehicles]),
        vmt_m=math.fsum(v.odometer for v in sim.vehicles),
        mean_wait_s=float(np.mean(waits)) if waits else NA,
        mean_ride_ratio=float(np.mean(ratios)) if ratios else NA,
        max_occupancy=sim.max_occupancy_seen,
        timings=[{"step": t.step, "t": t.t, "rr_rv_s": t.rr_rv_s, "build_s": t.build_s,
                  "solve_s": t.solve_s} for t in sim.timings])


def make_policy(config: ScenarioConfig, **kw):
    if config.policy == "insertion":
        return InsertionPolicy()
    return V2RBPolicy(heuristic=config.heuristic, timeout_s=config.params.solver_timeout, **kw)


def build_simulation(config: ScenarioConfig, **policy_kw) -> Simulation:
    net = config.network()
    reqs = generate_requests(config.slices(net), config.adoption_rate, [config.seed, 1], net,
                             config.params)
    reqs = [r for r in reqs if r.t_r < config.horizon]
    return Simulation(net, reqs, config.fleet_size, make_policy(config, **policy_kw), config.params,
                      seed=config.seed, horizon=config.horizon)


def write_events(events, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(EVENT_COLUMNS)
        for t, kind, veh, rid, node in events:
            w.writerow([repr(float(t)), kind, "" if veh is None else veh,
                        "" if rid is None else rid, "" if node is None else node])


def write_kpi(report: KPIReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["metric", "value"])
        w.writerows(report.kpi_rows())


def write_timings(report: KPIReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TIMING_COLUMNS)
        for row in report.timings:
            w.writerow([row[c] for c in TIMING_COLUMNS])


def run_scenario(config: ScenarioConfig, out_dir=None, name: str = "", **policy_kw):
    """Generate demand, simulate and report.  Returns ``(report, simulation)``."""
    sim = build_simulation(config, **policy_kw).run()
    report = report_from_simulation(sim, name)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_kpi(report, out / "kpi.csv")
        write_timings(report, out / "timings.csv")
        write_events(sim.events, out / "events.csv")
        write_request_log(sim.request_list, out / "requests.csv")
    return report, sim


def read_kpi(path) -> dict:
    with open(path, newline="") as fh:
        return {row["metric"]: row["value"] for row in csv.DictReader(fh)}


def read_timings(path) -> list:
    with open(path, newline="") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def rsd_from_events(events_csv, net, requests_csv):
    """Recompute rsd from the event log.

    Vehicle mileage is the summed length of every traversed edge (a
    ``depart`` at ``u`` followed by the same vehicle's ``arrive`` at ``v``);
    the served set is every request with an ``alight`` event.  Direct
    distances come from the request log.
    """
    direct = {int(r["id"]): float(r["d_direct_m"]) for r in _rows(requests_csv)}
    at = {}
    driven = []
    served = []
    for row in _rows(events_csv):
        kind = row["event_type"]
        if kind == "depart":
            at[row["vehicle"]] = int(row["node"])
        elif kind == "arrive":
            u = at.pop(row["vehicle"])
            driven.append(net.edge(u, int(row["node"])).length)
        elif kind == "alight":
            served.append(direct[int(row["request"])])
    return compute_rsd(served, driven)


def _rows(path):
    with open(path, newline="") as fh:
        yield from csv.DictReader(fh)


def compare_report(kpi_paths, ref=None) -> list:
    """Rows of served share, rsd, phase means and build speed-up versus ``ref``.

    Timings are read from ``timings.csv`` next to each ``kpi.csv``.
    """
    paths = [Path(p) for p in kpi_paths]
    ref = Path(ref) if ref is not None else paths[0]

    def load(p):
        kpi = read_kpi(p)
        tpath = p.parent / "timings.csv"
        rows = read_timings(tpath) if tpath.exists() else []
        means = {c: (float(np.mean([r[c] for r in rows])) if rows else 0.0)
                 for c in ("rr_rv_s", "build_s", "solve_s")}
        return kpi, means

    _, ref_means = load(ref)
    out = []
    for p in paths:
        kpi, means = load(p)
        if means["build_s"] > 0:
            speedup = ref_means["build_s"] / means["build_s"]
        else:
            speedup = 1.0 if ref_means["build_s"] == 0 else math.inf
        out.append({"scenario": p.parent.name or str(p), "served_share": _num(kpi.get("served_share")),
                    "rsd": _num(kpi.get("rsd")), **{f"mean_{k}": v for k, v in means.items()},
                    "build_speedup": speedup})
    return out


def _num(v):
    return NA if v in (None, NA) else float(v)


def format_table(rows) -> str:
    if not rows:
        return ""
    cols = list(rows[0])

    def cell(v):
        return f"{v:.4g}" if isinstance(v, float) else str(v)

    body = [[cell(r[c]) for c in cols] for r in rows]
    widths = [max(len(c), *(len(b[i]) for b in body)) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(b, widths)) for b in body]
    return "\n".join(lines)
