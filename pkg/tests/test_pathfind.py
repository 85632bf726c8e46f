import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_instance, rp
from irsroute.beamforming import BeamModel
from irsroute.channel import enumerate_all_paths
from irsroute.errors import InvalidArgumentError, ResourceLimitError
from irsroute.pathfind import (SINK, SOURCE, Candidate, PathGraph, build_line_graph, build_path_graph,
                               candidate_paths, los_graph_dot, maximal_cliques, path_graph_dot,
                               top_u_paths)
from irsroute.scenario import build_los_graph, load_scenario, make_graph


def _line_route(path):
    nodes = path.nodes
    return [SOURCE, *zip(nodes[:-1], nodes[1:]), SINK]


@given(st.integers(0, 5000), st.sampled_from(["codebook", "continuous"]))
def test_path_weight_is_minus_log_gain(seed, mode):
    scn, g = random_instance(seed, J=5, K=1)
    model = BeamModel(scn, g, mode)
    lg = build_line_graph(model, scn.eu_node(1))
    for p in enumerate_all_paths(g, scn.eu_node(1), 5):
        w = lg.weight(_line_route(p))
        assert abs(w + math.log(model.path_gain(p))) <= 1e-9 * abs(w)


def test_continuous_weight_closed_form(four_irs):
    scn, g = four_irs
    model = BeamModel(scn, g, "continuous")
    lg = build_line_graph(model, 5)
    p = rp(5, 2, 3, 4)
    want = -math.log(model.kappa(p) * 16.0 ** (2 * 3) * 8)
    assert abs(lg.weight(_line_route(p)) - want) <= 1e-12 * abs(want)


def test_fewer_paths_than_u(four_irs):
    scn, g = four_irs
    model = BeamModel(scn, g)
    every = enumerate_all_paths(g, 5, 4)
    top = top_u_paths(build_line_graph(model, 5), len(every) + 5, 4)
    assert sorted(top) == sorted(every)
    gains = [model.path_gain(p) for p in top]
    assert gains == sorted(gains, reverse=True)


@given(st.integers(0, 5000))
def test_u_one_is_argmax(seed):
    scn, g = random_instance(seed, J=6, K=1)
    model = BeamModel(scn, g)
    every = enumerate_all_paths(g, scn.eu_node(1), 6)
    best = max(every, key=lambda p: (model.path_gain(p), [-x for x in p.irs]))
    top = top_u_paths(build_line_graph(model, scn.eu_node(1)), 1, 6)
    assert abs(model.path_gain(top[0]) - model.path_gain(best)) <= 1e-12 * model.path_gain(best)


def test_hop_limit_respected(four_irs):
    scn, g = four_irs
    top = top_u_paths(build_line_graph(BeamModel(scn, g), 5), 10, 2)
    assert top and all(p.hops <= 2 for p in top)
    assert (2, 3, 4) not in {p.irs for p in top}


def test_unreachable_eu_and_bad_u(four_irs):
    scn, g = four_irs
    g2 = make_graph(4, 1, [e for e in g.edges if e[1] != 5])
    lg = build_line_graph(BeamModel(scn, g2), 5)
    assert top_u_paths(lg, 3) == []
    with pytest.raises(InvalidArgumentError):
        top_u_paths(lg, 0)


def test_equal_gain_ties_are_lexicographic():
    # mirror-image single-element IRSs give two paths of identical gain
    scn = load_scenario({
        "rf": {"carrier_hz": 5e9, "beta_db": -46.0},
        "bs": {"position": [0, 0, 0], "antennas": 1, "tx_power_dbm": 30},
        "irs_defaults": {"m1": 1, "m2": 1, "codebook_h": 1, "codebook_v": 1},
        "irs": [{"position": [10, 5, 0], "normal": [0, -1, 0]},
                {"position": [10, -5, 0], "normal": [0, 1, 0]}],
        "eus": [{"position": [20, 0, 0]}],
    })
    g = build_los_graph(scn)
    top = top_u_paths(build_line_graph(BeamModel(scn, g), 3), 2)
    assert [p.irs for p in top] == [(1,), (2,)]
    assert [p.irs for p in top_u_paths(build_line_graph(BeamModel(scn, g), 3), 1)] == [(1,)]


@given(st.integers(0, 3000))
def test_best_bundle_gain_nondecreasing_in_u(seed):
    scn, g = random_instance(seed, J=5, K=1)
    model = BeamModel(scn, g)
    prev = 0.0
    for U in (1, 2, 4, 8):
        pg = build_path_graph(candidate_paths(model, 1, U, 5))
        best = max(c.gain(pg, 1) for c in maximal_cliques(pg))
        assert best >= prev * (1 - 1e-12)
        prev = best


def _cand(eu, *irs):
    return Candidate(eu, rp(10 + eu, *irs), 1.0)


def test_path_graph_examples():
    pg = build_path_graph([_cand(1, 1, 4), _cand(1, 2, 4), _cand(1, 2, 3)])
    assert not pg.adjacent(0, 1)
    assert pg.adjacent(0, 2)
    one = build_path_graph([_cand(1, 1)])
    assert len(one) == 1 and one.edges == []


def _pg_from_edges(n, edges):
    adj = [0] * n
    for u, v in edges:
        adj[u] |= 1 << v
        adj[v] |= 1 << u
    return PathGraph(tuple(_cand(1, i + 1) for i in range(n)), tuple(adj))


@pytest.mark.parametrize("backend", ["python", "cython"])
def test_small_clique_examples(backend):
    from irsroute import _kernels
    if backend == "cython" and _kernels.BACKEND != "cython":
        pytest.skip("compiled kernel not built")
    tri = _pg_from_edges(3, [(0, 1), (1, 2), (0, 2)])
    assert [c.members for c in maximal_cliques(tri, backend=backend)] == [(0, 1, 2)]
    chain = _pg_from_edges(3, [(0, 1), (1, 2)])
    assert [c.members for c in maximal_cliques(chain, backend=backend)] == [(0, 1), (1, 2)]
    lone = _pg_from_edges(2, [])
    assert [c.members for c in maximal_cliques(lone, backend=backend)] == [(0,), (1,)]


@given(st.integers(1, 14), st.floats(0, 1), st.integers(0, 10_000))
def test_cliques_match_networkx(n, p, seed):
    rng = np.random.default_rng(seed)
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    pg = _pg_from_edges(n, edges)
    G = nx.Graph()
    G.add_nodes_from(range(n))
    G.add_edges_from(edges)
    want = sorted(tuple(sorted(c)) for c in nx.find_cliques(G))
    got = [c.members for c in maximal_cliques(pg)]
    assert got == want
    for c in got:
        # maximal: no outside vertex is adjacent to every member
        for v in set(range(n)) - set(c):
            assert not all(pg.adjacent(v, u) for u in c)


@given(st.integers(0, 3000))
def test_cliques_are_disjoint_bundles(seed):
    scn, g = random_instance(seed, J=6, K=2)
    model = BeamModel(scn, g)
    cands = candidate_paths(model, 1, 6, 6) + candidate_paths(model, 2, 6, 6)
    pg = build_path_graph(cands)
    for c in maximal_cliques(pg):
        seen = set()
        for cand in c.candidates(pg):
            assert not seen & set(cand.path.irs)
            seen |= set(cand.path.irs)


def test_clique_cap():
    pg = _pg_from_edges(61, [])
    with pytest.raises(ResourceLimitError):
        maximal_cliques(pg)
    assert len(maximal_cliques(pg, cap=100)) == 61


def test_dot_exports(four_irs):
    scn, g = four_irs
    dot = los_graph_dot(g, scn)
    assert dot.startswith("digraph") and "n1 -> n4" in dot and "EU1" in dot
    pg = build_path_graph(candidate_paths(BeamModel(scn, g), 1, 4))
    assert path_graph_dot(pg).count("--") == len(pg.edges)
