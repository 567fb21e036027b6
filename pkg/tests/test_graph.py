import itertools
import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from robustdyn.errors import InfiniteResistance, InvalidArgument, InvalidUpdate, SizeLimitError
from robustdyn.graph import (Cut, Graph, GraphUpdate, conductance_min, complete_graph, cut_weight, cycle_graph,
                             distance_exact, effective_resistance_exact, min_cut_enumerate, min_cut_exact,
                             path_graph, quadratic_form, random_circulant, random_graph, random_multigraph,
                             read_graph, read_script, sweep_cut, two_cliques, volume, write_graph, write_script)


def to_nx(g: Graph) -> nx.Graph:
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_weighted_edges_from(g.edges())
    return h


@st.composite
def graphs(draw, n_min=2, n_max=10, connected=False):
    n = draw(st.integers(n_min, n_max))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
    ws = draw(st.lists(st.integers(1, 9), min_size=len(chosen), max_size=len(chosen)))
    edges = [(u, v, w) for (u, v), w in zip(chosen, ws)]
    if connected:
        have = {(u, v) for u, v, _ in edges}
        edges += [(i, i + 1, 1) for i in range(n - 1) if (i, i + 1) not in have]
    return Graph.from_edges(n, edges)


# ---------------------------------------------------------------- updates

def test_single_edge_roundtrip():
    g = Graph(3)
    g.apply(GraphUpdate.insert(1, 2, 3))
    assert g.m == 1 and g.deg[1] == g.deg[2] == 3
    g.apply(GraphUpdate.delete(1, 2))
    assert g.m == 0 and g.deg[1] == g.deg[2] == 0
    assert len(g.log) == 2


def test_invalid_updates():
    g = Graph(3)
    g.apply(GraphUpdate.insert(0, 1, 1))
    with pytest.raises(InvalidUpdate):
        g.apply(GraphUpdate.insert(1, 0, 2))
    with pytest.raises(InvalidUpdate):
        g.apply(GraphUpdate.delete(1, 2))
    with pytest.raises(InvalidUpdate):
        g.apply(GraphUpdate.insert(2, 2, 1))
    with pytest.raises(InvalidUpdate):
        g.apply(GraphUpdate.insert(0, 2, 0))


def _random_script(n, steps, rng):
    g = Graph(n)
    out = []
    for _ in range(steps):
        u, v = map(int, rng.choice(n, 2, replace=False))
        upd = GraphUpdate.delete(u, v) if g.has_edge(u, v) else GraphUpdate.insert(u, v, int(rng.integers(1, 6)))
        g.apply(upd)
        out.append(upd)
    return out


def test_script_replay_identical():
    script = _random_script(8, 100, np.random.default_rng(4))
    a, b = Graph(8), Graph(8)
    for u in script:
        a.apply(u)
    for u in read_script(write_script(script)):
        b.apply(u)
    assert a.adj == b.adj and a.m == b.m


@given(st.integers(0, 2**32 - 1))
def test_incremental_state_matches_recount(seed):
    rng = np.random.default_rng(seed)
    g = Graph(7)
    for u in _random_script(7, 40, rng):
        g.apply(u)
    deg, m = g.recount()
    assert m == g.m
    assert np.allclose(deg, [g.deg[u] for u in range(7)])
    assert all(g.adj[u][v] == g.adj[v][u] for u in range(7) for v in g.adj[u])


def test_graph_file_roundtrip():
    g = random_graph(9, 15, np.random.default_rng(0), 1, 5)
    h = read_graph(write_graph(g))
    assert h.adj == g.adj
    with pytest.raises(InvalidArgument):
        read_graph("3 2\n0 1 1\n")


# ---------------------------------------------------------------- cuts and volumes

def test_k4_single_vertex_cut():
    g = complete_graph(4)
    assert cut_weight(g, Cut.of([0])) == 3
    assert volume(g, Cut.of([0])) == 3


def test_c6_arc_cut():
    assert cut_weight(cycle_graph(6), Cut.of([0, 1, 2])) == 2


@pytest.mark.parametrize("side", [[], [0, 1, 2, 3]])
def test_cut_rejects_trivial_side(side):
    with pytest.raises(InvalidArgument):
        cut_weight(complete_graph(4), Cut.of(side))


@given(graphs(), st.data())
def test_cut_and_quadratic_form(g, data):
    side = data.draw(st.lists(st.integers(0, g.n - 1), min_size=1, max_size=g.n - 1, unique=True))
    cut = Cut.of(side)
    recount = sum(w for u, v, w in g.edge_list() if (u in side) != (v in side))
    assert cut_weight(g, cut) == recount
    x = np.zeros(g.n)
    x[side] = 1
    assert quadratic_form(g, x) == pytest.approx(recount)
    assert quadratic_form(g, x) == pytest.approx(x @ g.laplacian() @ x)


# ---------------------------------------------------------------- conductance

def _brute_conductance(g):
    best = math.inf
    for k in range(1, g.n):
        for S in itertools.combinations(range(g.n), k):
            d = cut_weight(g, Cut.of(S))
            v = min(volume(g, Cut.of(S)), 2 * g.total_weight() - volume(g, Cut.of(S)))
            if v > 0:
                best = min(best, d / v)
    return best


def test_conductance_p4():
    phi, cut, approx = conductance_min(path_graph(4))
    assert phi == pytest.approx(1 / 3) and not approx
    assert set(cut.side) in ({0, 1}, {2, 3})


def test_conductance_k4():
    phi, cut, _ = conductance_min(complete_graph(4))
    assert phi == pytest.approx(2 / 3)
    assert len(cut.side) == 2


def test_conductance_single_edge():
    assert conductance_min(path_graph(2))[0] == 1.0


def test_conductance_size_limit():
    with pytest.raises(SizeLimitError):
        conductance_min(complete_graph(22))
    phi, _, approx = conductance_min(complete_graph(22), exact=False)
    assert approx and phi >= 0.5


@given(graphs(n_min=3, n_max=8, connected=True))
def test_conductance_matches_brute_force(g):
    phi, cut, _ = conductance_min(g)
    assert phi == pytest.approx(_brute_conductance(g))
    vol = volume(g, cut)
    assert phi == pytest.approx(cut_weight(g, cut) / min(vol, 2 * g.total_weight() - vol))


@given(graphs(n_min=3, n_max=9, connected=True))
def test_sweep_is_an_upper_bound(g):
    phi_sweep, side = sweep_cut(g.adjacency_matrix())
    assert phi_sweep >= conductance_min(g)[0] - 1e-12
    assert 0 < len(side) < g.n


# ---------------------------------------------------------------- min cut

def test_min_cut_cycle_and_k4():
    for n in (3, 5, 9):
        assert min_cut_exact(cycle_graph(n))[0] == 2
    assert min_cut_exact(complete_graph(4))[0] == 3


def test_min_cut_disconnected():
    g = Graph.from_edges(4, [(0, 1, 1), (2, 3, 1)])
    val, cut = min_cut_exact(g)
    assert val == 0 and cut_weight(g, cut) == 0


def test_sw_equals_enumeration_50_graphs():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        n = int(rng.integers(3, 13))
        m = int(rng.integers(n - 1, n * (n - 1) // 2 + 1))
        g = random_graph(n, m, rng, 1, 9)
        if len(g.components()) > 1:
            continue
        sw, cut = min_cut_exact(g)
        assert sw == pytest.approx(min_cut_enumerate(g)[0])
        assert cut_weight(g, cut) == pytest.approx(sw)


@given(graphs(n_min=2, n_max=12, connected=True))
def test_sw_matches_networkx(g):
    assert min_cut_exact(g)[0] == pytest.approx(nx.stoer_wagner(to_nx(g))[0])


# ---------------------------------------------------------------- resistance and distance

@pytest.mark.parametrize("d", [1, 3, 6])
def test_path_resistance(d):
    assert effective_resistance_exact(path_graph(8), 0, d) == pytest.approx(d)


@pytest.mark.parametrize("n", [3, 5, 10])
def test_cycle_resistance(n):
    assert effective_resistance_exact(cycle_graph(n), 0, 1) == pytest.approx((n - 1) / n)


def test_resistance_disconnected():
    with pytest.raises(InfiniteResistance):
        effective_resistance_exact(Graph.from_edges(4, [(0, 1, 1), (2, 3, 1)]), 0, 3)


def _current_flow(g, u, v):
    """Ground the sink, solve the reduced Laplacian system for a unit injection."""
    L = g.laplacian()
    keep = [i for i in range(g.n) if i != v]
    b = np.zeros(g.n)
    b[u] = 1.0
    phi = np.linalg.solve(L[np.ix_(keep, keep)], b[keep])
    return phi[keep.index(u)]


@given(graphs(n_min=2, n_max=9, connected=True), st.data())
def test_resistance_vs_current_flow(g, data):
    u, v = data.draw(st.lists(st.integers(0, g.n - 1), min_size=2, max_size=2, unique=True))
    # unit conductances -> resistances 1/w; our weights are conductances
    assert effective_resistance_exact(g, u, v) == pytest.approx(_current_flow(g, u, v), rel=1e-9)


@given(graphs(n_min=3, n_max=8, connected=True), st.data())
def test_resistance_is_a_metric(g, data):
    a, b, c = data.draw(st.lists(st.integers(0, g.n - 1), min_size=3, max_size=3, unique=True))
    R = lambda x, y: effective_resistance_exact(g, x, y)  # noqa: E731
    assert R(a, b) == pytest.approx(R(b, a), abs=1e-9)
    assert R(a, c) <= R(a, b) + R(b, c) + 1e-9


def test_distance_examples():
    g = path_graph(6)
    assert distance_exact(g, 0, 5) == 5
    assert distance_exact(g, 3, 3) == 0
    assert distance_exact(Graph.from_edges(3, [(0, 1, 1)]), 0, 2) == math.inf


@given(graphs(n_min=2, n_max=10))
def test_distance_vs_floyd_warshall(g):
    fw = nx.floyd_warshall_numpy(to_nx(g), weight="weight")
    for s in range(g.n):
        for t in range(g.n):
            assert distance_exact(g, s, t) == fw[s, t]


# ---------------------------------------------------------------- families

def test_families():
    rng = np.random.default_rng(0)
    g = two_cliques(5, 7, 4, 2, rng)
    assert g.n == 10 and g.m == 2 * 10 + 4
    assert min_cut_exact(g)[0] == 8
    mg = random_multigraph(20, 500, rng)
    assert mg.total_weight() == 500
    c = random_circulant(20, 6, rng)
    assert all(len(c.adj[u]) == 6 for u in range(20))
    with pytest.raises(InvalidArgument):
        random_graph(4, 7, rng)
