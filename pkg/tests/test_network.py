import math

import numpy as np
import pytest

from odrp.network import (Edge, NetworkLoadError, Node, Network, NoRouteError, grid_network,
                          hour_of, load_network, write_network)


def simple_paths(net, s, t, hour):
    """Every simple path s -> t as (travel_time, distance, nodes)."""
    out = []

    def dfs(u, seen, tt, dd, path):
        if u == t:
            out.append((tt, dd, tuple(path)))
            return
        for (a, b), e in net.edges.items():
            if a == u and b not in seen:
                seen.add(b)
                path.append(b)
                dfs(b, seen, tt + e.travel_time_by_hour[hour], dd + e.length, path)
                path.pop()
                seen.discard(b)

    dfs(s, {s}, 0.0, 0.0, [s])
    return out


def test_line4_queries(line4):
    r = line4.shortest_path(0, 2, 0)
    assert (r.travel_time, r.distance, r.nodes) == (120.0, 2000.0, (0, 1, 2))
    r = line4.shortest_path(1, 1, 0)
    assert (r.travel_time, r.distance, r.nodes) == (0.0, 0.0, (1,))


def test_grid_path_matches_enumeration():
    rng = np.random.default_rng(4)
    for trial in range(5):
        net = grid_network(3, 3, spacing=100, travel_time=60, rng=rng, jitter=0.5)
        for s in range(9):
            for t in range(9):
                if s == t:
                    continue
                best = min(simple_paths(net, s, t, 0))
                r = net.shortest_path(s, t, 0)
                assert r.travel_time == best[0]
                # among fastest paths the returned one is also shortest
                assert r.distance == min(d for tt, d, _ in simple_paths(net, s, t, 0) if tt == best[0])
                assert r.travel_time == math.fsum(net.edge(u, v).travel_time_by_hour[0]
                                                  for u, v in zip(r.nodes, r.nodes[1:]))


def test_access_matrix(line4):
    ids, tt, dist = line4.access_matrix(0)
    i, j = ids.index(0), ids.index(3)
    assert (tt[i, j], dist[i, j]) == (180.0, 3000.0)
    assert np.all(np.diag(tt) == 0) and np.all(np.diag(dist) == 0)
    with pytest.raises(ValueError):
        tt[0, 1] = 5.0


def test_access_matrix_matches_direct_queries():
    net = grid_network(3, 3, rng=np.random.default_rng(1), jitter=0.4)
    ids, tt, dist = net.access_matrix(5)
    for a, x in enumerate(ids):
        for b, y in enumerate(ids):
            r = net.shortest_path(x, y, 5 * 3600)
            assert (tt[a, b], dist[a, b]) == (r.travel_time, r.distance)


def test_edge_order_does_not_matter():
    net = grid_network(4, 4, rng=np.random.default_rng(2), jitter=0.3)
    edges = list(net.edges.values())
    rev = Network(list(net.nodes), edges[::-1])
    for s in range(16):
        for t in range(16):
            assert net.travel(s, t, 0) == rev.travel(s, t, 0)


def test_hour_is_frozen_at_departure():
    profile = [1.0] * 24
    profile[8] = 2.0
    net = grid_network(1, 3, travel_time=60, hourly_profile=profile)
    assert net.travel(0, 2, 8 * 3600 - 1) == (120.0, 1000.0)
    assert net.travel(0, 2, 8 * 3600) == (240.0, 1000.0)
    assert hour_of(86399) == 23 and hour_of(86400) == 0


def test_no_route():
    nodes = [Node(0, 0, 0, True), Node(1, 1, 0, True)]
    net = Network(nodes, [Edge(0, 1, 5.0, (1.0,) * 24)])
    with pytest.raises(NoRouteError):
        net.shortest_path(1, 0, 0)
    assert math.isinf(net.travel(1, 0, 0)[0])
    with pytest.raises(NetworkLoadError):
        net.check_access_connectivity()


def test_roundtrip_and_single_tt_column(tmp_path):
    net = grid_network(2, 3, rng=np.random.default_rng(0), jitter=0.2)
    npath, epath = write_network(net, tmp_path)
    back = load_network(npath, epath)
    assert back.edges == net.edges and back.nodes == net.nodes
    (tmp_path / "e2.csv").write_text("from,to,length_m,tt\n0,1,100,7\n1,0,100,9\n")
    (tmp_path / "n2.csv").write_text("id,x,y,is_access_point\n0,0,0,1\n1,100,0,1\n")
    small = load_network(tmp_path / "n2.csv", tmp_path / "e2.csv")
    assert small.edge(1, 0).travel_time_by_hour == (9.0,) * 24


def test_load_errors_name_file_and_line(tmp_path):
    (tmp_path / "n.csv").write_text("id,x,y,is_access_point\n0,0,0,1\n1,zz,0,1\n")
    (tmp_path / "e.csv").write_text("from,to,length_m,tt\n0,1,100,7\n")
    with pytest.raises(NetworkLoadError, match=r"n\.csv:3"):
        load_network(tmp_path / "n.csv", tmp_path / "e.csv")
    (tmp_path / "n.csv").write_text("id,x,y,is_access_point\n0,0,0,1\n1,1,0,1\n")
    (tmp_path / "e.csv").write_text("from,to,length_m,tt\n0,1,100,-7\n")
    with pytest.raises(NetworkLoadError, match="non-positive"):
        load_network(tmp_path / "n.csv", tmp_path / "e.csv")
    (tmp_path / "e.csv").write_text("from,to,length_m\n0,1,100\n")
    with pytest.raises(NetworkLoadError, match="tt"):
        load_network(tmp_path / "n.csv", tmp_path / "e.csv")
