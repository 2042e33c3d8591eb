"""Directed road graph with hourly piecewise-constant edge travel times.

Travel times for a query are frozen at the hour containing the departure
time.  Single-source label-setting results are cached per (source, hour), so
repeated travel-time lookups during tour scheduling are dictionary hits.
"""
from __future__ import annotations

import csv
import heapq
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

LOG = logging.getLogger(__name__)

HOURS = 24
SECONDS_PER_DAY = 86400


class NoRouteError(ValueError):
    """Raised when a destination cannot be reached from an origin."""


class NetworkLoadError(ValueError):
    pass


@dataclass(frozen=True)
class Node:
    id: int
    x: float
    y: float
    is_access_point: bool = True


@dataclass(frozen=True)
class Edge:
    source: int
    target: int
    length: float
    travel_time_by_hour: tuple

    def travel_time(self, hour: int) -> float:
        return self.travel_time_by_hour[hour]


@dataclass(frozen=True)
class RouteResult:
    nodes: tuple
    travel_time: float
    distance: float


def hour_of(t: float) -> int:
    return int(t // 3600) % HOURS


class Network:
    """Road graph; read-only once constructed."""

    def __init__(self, nodes, edges):
        nodes = sorted(nodes, key=lambda n: n.id)
        if [n.id for n in nodes] != list(range(len(nodes))):
            raise NetworkLoadError("node ids must be unique and dense from 0")
        for n in nodes:
            if not (math.isfinite(n.x) and math.isfinite(n.y)):
                raise NetworkLoadError(f"node {n.id} has non-finite coordinates")
        self.nodes = tuple(nodes)
        # parallel edges: keep the one with the smaller (travel time, length) per hour-0,
        # ties by insertion-independent key
        best = {}
        for e in edges:
            if e.source not in range(len(nodes)) or e.target not in range(len(nodes)):
                raise NetworkLoadError(f"edge {e.source}->{e.target} references unknown node")
            if e.length <= 0 or len(e.travel_time_by_hour) != HOURS:
                raise NetworkLoadError(f"edge {e.source}->{e.target} has invalid length or hours")
            if any(t <= 0 for t in e.travel_time_by_hour):
                raise NetworkLoadError(f"edge {e.source}->{e.target} has non-positive travel time")
            key = (e.source, e.target)
            cand = (e.travel_time_by_hour, e.length)
            if key not in best or cand < (best[key].travel_time_by_hour, best[key].length):
                best[key] = e
        self.edges = {k: best[k] for k in sorted(best)}
        self._out = [[] for _ in nodes]
        for (u, v), e in self.edges.items():
            self._out[u].append(e)
        self.access_points = tuple(n.id for n in nodes if n.is_access_point)
        self._trees = {}
        self._matrices = {}

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def edge(self, u: int, v: int) -> Edge:
        return self.edges[(u, v)]

    def _tree(self, source: int, hour: int):
        key = (source, hour)
        tree = self._trees.get(key)
        if tree is not None:
            return tree
        n = len(self.nodes)
        tt = [math.inf] * n
        dd = [math.inf] * n
        pred = [-1] * n
        tt[source] = 0.0
        dd[source] = 0.0
        done = [False] * n
        heap = [(0.0, 0.0, source)]
        while heap:
            t, d, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            for e in self._out[u]:
                v = e.target
                if done[v]:
                    continue
                nt = t + e.travel_time_by_hour[hour]
                nd = d + e.length
                # lexicographic (time, distance, predecessor id) labels are
                # independent of edge insertion order
                if (nt, nd, u) < (tt[v], dd[v], pred[v] if pred[v] >= 0 else math.inf):
                    tt[v], dd[v], pred[v] = nt, nd, u
                    heapq.heappush(heap, (nt, nd, v))
        tree = (tt, dd, pred)
        self._trees[key] = tree
        return tree

    def travel(self, origin: int, destination: int, depart_time: float):
        """(travel_time, distance) of the fastest path at the departure hour."""
        if origin == destination:
            return 0.0, 0.0
        tt, dd, _ = self._tree(origin, hour_of(depart_time))
        return tt[destination], dd[destination]

    def shortest_path(self, origin: int, destination: int, depart_time: float) -> RouteResult:
        n = len(self.nodes)
        if not (0 <= origin < n and 0 <= destination < n):
            raise ValueError(f"unknown node in query {origin}->{destination}")
        if origin == destination:
            return RouteResult((origin,), 0.0, 0.0)
        tt, dd, pred = self._tree(origin, hour_of(depart_time))
        if math.isinf(tt[destination]):
            raise NoRouteError(f"no route from {origin} to {destination}")
        path = [destination]
        while path[-1] != origin:
            path.append(pred[path[-1]])
        return RouteResult(tuple(reversed(path)), tt[destination], dd[destination])

    def route_edges(self, route: RouteResult, depart_time: float):
        """Per-edge (u, v, travel_time, length) for a route, frozen at departure hour."""
        h = hour_of(depart_time)
        out = []
        for u, v in zip(route.nodes[:-1], route.nodes[1:]):
            e = self.edges[(u, v)]
            out.append((u, v, e.travel_time_by_hour[h], e.length))
        return out

    def access_matrix(self, hour: int):
        """Travel time and distance between all access-point pairs at ``hour``.

        Returns ``(ids, tt, dist)`` where ``tt[a, b]`` is indexed by position
        in ``ids``; unreachable pairs are ``inf``.
        """
        if not 0 <= hour < HOURS:
            raise ValueError("hour must be in 0..23")
        if hour not in self._matrices:
            ids = self.access_points
            k = len(ids)
            tt = np.full((k, k), np.inf)
            dist = np.full((k, k), np.inf)
            for i, a in enumerate(ids):
                ta, da, _ = self._tree(a, hour)
                tt[i] = [ta[b] for b in ids]
                dist[i] = [da[b] for b in ids]
            tt.flags.writeable = False
            dist.flags.writeable = False
            self._matrices[hour] = (ids, tt, dist)
        return self._matrices[hour]

    def check_access_connectivity(self) -> None:
        # reachability does not depend on the hour since every edge exists all day
        _, tt, _ = self.access_matrix(0)
        if np.isinf(tt).any():
            raise NetworkLoadError("access points are not strongly connected")


def _as_hours(values):
    values = [float(v) for v in values]
    if len(values) == 1:
        values = values * HOURS
    return tuple(values)


def load_network(nodes_csv, edges_csv) -> Network:
    """Read ``nodes.csv`` (id,x,y,is_access_point) and ``edges.csv``.

    ``edges.csv`` carries ``from,to,length_m`` followed by either
    ``tt_h00..tt_h23`` or a single ``tt`` column.
    """
    nodes = []
    with open(nodes_csv, newline="") as fh:
        for lineno, row in enumerate(csv.DictReader(fh), start=2):
            try:
                nodes.append(Node(int(row["id"]), float(row["x"]), float(row["y"]),
                                  bool(int(row["is_access_point"]))))
            except (KeyError, ValueError, TypeError) as exc:
                raise NetworkLoadError(f"{nodes_csv}:{lineno}: {exc}") from exc
    edges = []
    with open(edges_csv, newline="") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        hour_cols = [f"tt_h{h:02d}" for h in range(HOURS)]
        if all(c in cols for c in hour_cols):
            tcols = hour_cols
        elif "tt" in cols:
            tcols = ["tt"]
        else:
            raise NetworkLoadError(f"{edges_csv}: needs tt_h00..tt_h23 or tt column")
        for lineno, row in enumerate(reader, start=2):
            try:
                edges.append(Edge(int(row["from"]), int(row["to"]), float(row["length_m"]),
                                  _as_hours(row[c] for c in tcols)))
            except (KeyError, ValueError, TypeError) as exc:
                raise NetworkLoadError(f"{edges_csv}:{lineno}: {exc}") from exc
    try:
        return Network(nodes, edges)
    except NetworkLoadError as exc:
        raise NetworkLoadError(f"{edges_csv}: {exc}") from exc


def write_network(net: Network, directory) -> tuple:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    npath, epath = directory / "nodes.csv", directory / "edges.csv"
    with open(npath, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "x", "y", "is_access_point"])
        for n in net.nodes:
            w.writerow([n.id, n.x, n.y, int(n.is_access_point)])
    with open(epath, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["from", "to", "length_m"] + [f"tt_h{h:02d}" for h in range(HOURS)])
        for e in net.edges.values():
            w.writerow([e.source, e.target, e.length] + list(e.travel_time_by_hour))
    return npath, epath


def line_network(n: int = 4, length: float = 1000.0, travel_time: float = 60.0) -> Network:
    """Bidirectional chain n0 - n1 - ... with identical edges."""
    nodes = [Node(i, i * length, 0.0, True) for i in range(n)]
    hours = (travel_time,) * HOURS
    edges = []
    for i in range(n - 1):
        edges.append(Edge(i, i + 1, length, hours))
        edges.append(Edge(i + 1, i, length, hours))
    return Network(nodes, edges)


def grid_network(rows: int, cols: int, spacing: float = 500.0, travel_time: float = 60.0,
                 rng=None, jitter: float = 0.0, hourly_profile=None) -> Network:
    """Bidirectional rows x cols grid; node id = r * cols + c.

    With ``rng`` and ``jitter`` > 0, each directed edge gets an integer travel
    time drawn uniformly from ``travel_time * [1 - jitter, 1 + jitter]``.
    ``hourly_profile`` (24 multipliers) makes times hour-dependent.
    """
    nodes = [Node(r * cols + c, c * spacing, r * spacing, True)
             for r in range(rows) for c in range(cols)]
    profile = hourly_profile if hourly_profile is not None else [1.0] * HOURS
    edges = []

    def add(u, v):
        base = travel_time
        if rng is not None and jitter > 0:
            base = float(rng.integers(round(travel_time * (1 - jitter)),
                                      round(travel_time * (1 + jitter)) + 1))
        edges.append(Edge(u, v, spacing, tuple(float(round(base * p)) for p in profile)))

    for r in range(rows):
        for c in range(cols):
            u = r * cols + c
            if c + 1 < cols:
                add(u, u + 1)
                add(u + 1, u)
            if r + 1 < rows:
                add(u, u + cols)
                add(u + cols, u)
    return Network(nodes, edges)
