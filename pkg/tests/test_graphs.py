import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_lp, tiny_system
from neuralmip.graphs import (
    VAR_FEATURES, BipartiteGraph, GraphError, SpatialGraph, SpatiotemporalGraph,
    build_bipartite_graph, build_spatial_graph, build_spatiotemporal_graph, dumps,
    generator_feature_width, graph_sizes, scaled_laplacian)
from neuralmip.milp import make_problem, solve_lp
from neuralmip.power import GeneratorParams, LoadScenario, SystemSpec, make_instance
from neuralmip.power.ucmodel import build_uc_milp


def instance_with(system, T=24, scale=1.0):
    d = scale * np.ones((system.n_buses, T))
    return make_instance(system, LoadScenario(d, np.zeros(T)))


# -- physics graphs -------------------------------------------------------------------------

def test_spatiotemporal_shapes_and_triangle():
    g = build_spatiotemporal_graph(instance_with(tiny_system(), T=24, scale=10.0))
    assert g.node_features.shape == (3, 24, 1)
    assert g.adjacency.sum() == 6
    assert np.array_equal(g.adjacency, g.adjacency.T) and not np.diag(g.adjacency).any()


def test_zero_load_keeps_topology():
    a = build_spatiotemporal_graph(instance_with(tiny_system(), T=4, scale=0.0))
    b = build_spatiotemporal_graph(instance_with(tiny_system(), T=4, scale=5.0))
    assert not a.node_features.any()
    assert np.array_equal(a.adjacency, b.adjacency)


def test_spatial_graph_rows(tiny):
    g = build_spatial_graph(tiny)
    assert g.node_features.shape == (3, generator_feature_width())
    # bus 3 hosts no generator
    assert not g.node_features[2].any() and not g.gen_mask[2]
    gen0 = tiny.generators[0]
    assert tuple(g.node_features[0, -2:]) == (1.0, 50.0)
    # PB padded with its last breakpoint up to 5 entries
    assert list(g.node_features[0, :5]) == [20.0, 60.0, 100.0, 100.0, 100.0]
    assert list(g.node_features[0, 10:14]) == [gen0.ru, gen0.rd, gen0.su, gen0.sd]
    assert g.edges.shape[0] == g.adjacency.sum() / 2
    assert list(g.gen_rows) == [0, 1]


def test_feature_width_counting():
    assert generator_feature_width(2) == 12
    g = build_spatial_graph(instance_with(tiny_system(), T=4), max_segments=2)
    assert g.node_features.shape[1] == 12


def test_two_generators_on_one_bus_rejected():
    base = tiny_system()
    g1 = base.generators[1]
    clash = GeneratorParams(**{**g1.__dict__, "bus": 1})
    with pytest.raises(ValueError):
        SystemSpec(base.buses, base.lines, (base.generators[0], clash), base.slack_bus,
                   base.bus_weights)
    # the encoder keeps its own guard for systems that bypass validation
    inst = instance_with(base, T=4)
    object.__setattr__(inst.system, "generators", (base.generators[0], clash))
    with pytest.raises(GraphError):
        build_spatial_graph(inst)


def test_parallel_lines_merged():
    base = tiny_system()
    extra = base.lines[0].__class__(3, 1, 2, 0.2, 5.0, 30.0, -30.0)
    system = SystemSpec(base.buses, base.lines + (extra,), base.generators, base.slack_bus,
                        base.bus_weights)
    g = build_spatial_graph(instance_with(system, T=4))
    assert g.adjacency.sum() == 6
    row = g.edge_features[[tuple(e) for e in g.edges.tolist()].index((0, 1))]
    assert list(row) == [110.0, -110.0, 0.1, 10.0]


def test_graph_json_round_trip(tiny):
    st_graph = build_spatiotemporal_graph(tiny)
    sg = build_spatial_graph(tiny)
    import json
    back = SpatiotemporalGraph.from_dict(json.loads(dumps(st_graph)))
    assert np.array_equal(back.node_features, st_graph.node_features)
    back = SpatialGraph.from_dict(json.loads(dumps(sg)))
    assert np.array_equal(back.node_features, sg.node_features)
    assert np.array_equal(back.edges, sg.edges)


# -- laplacian ------------------------------------------------------------------------------

def test_laplacian_two_node_path():
    adj = np.array([[0.0, 1.0], [1.0, 0.0]])
    lap = np.eye(2) - adj                 # degrees are 1
    oracle = np.linalg.eigvalsh(lap)
    assert np.allclose(oracle, [0.0, 2.0])
    out = scaled_laplacian(adj)
    assert out.lambda_max == pytest.approx(2.0, abs=1e-8)
    assert np.allclose(out.matrix, [[0.0, -1.0], [-1.0, 0.0]], atol=1e-8)


def test_laplacian_k3_spectrum():
    adj = np.ones((3, 3)) - np.eye(3)
    d = np.diag(1 / np.sqrt(adj.sum(axis=1)))
    assert np.allclose(np.linalg.eigvalsh(np.eye(3) - d @ adj @ d), [0.0, 1.5, 1.5])
    out = scaled_laplacian(adj)
    assert out.lambda_max == pytest.approx(1.5, abs=1e-8)
    assert np.allclose(np.linalg.eigvalsh(out.matrix), [-1.0, 1.0, 1.0], atol=1e-7)


def test_isolated_node_rejected():
    adj = np.zeros((3, 3))
    adj[0, 1] = adj[1, 0] = 1
    with pytest.raises(GraphError):
        scaled_laplacian(adj)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**31 - 1))
def test_laplacian_spectrum_bounded(n, seed):
    rng = np.random.default_rng(seed)
    adj = np.zeros((n, n))
    for i in range(1, n):                               # random spanning tree
        j = int(rng.integers(i))
        adj[i, j] = adj[j, i] = 1
    extra = np.triu(rng.random((n, n)) < 0.3, 1)
    adj = np.maximum(adj, extra + extra.T)
    out = scaled_laplacian(adj)
    assert np.abs(out.matrix - out.matrix.T).max() <= 1e-12
    assert np.abs(np.linalg.eigvalsh(out.matrix)).max() <= 1 + 1e-8


# -- bipartite ------------------------------------------------------------------------------

def test_bipartite_on_uc_instance(tiny):
    problem, _ = build_uc_milp(tiny)
    lp = solve_lp(problem)
    g = build_bipartite_graph(problem, lp)
    assert g.var_features.shape == (problem.n, len(VAR_FEATURES)) == (problem.n, 19)
    assert g.n_edges == sp.csr_matrix(problem.A).nnz
    assert np.all(np.isfinite(g.var_features)) and np.all(np.isfinite(g.cons_features))
    row_max = np.zeros(problem.m)
    np.maximum.at(row_max, g.incidence[:, 0], np.abs(g.edge_features[:, 0]))
    assert np.allclose(row_max, 1.0)
    assert np.allclose(g.var_features[:, 0:4].sum(axis=1), 1.0)
    assert np.allclose(g.var_features[:, 10:14].sum(axis=1), 1.0)
    # root node without incumbents
    assert not g.var_features[:, 15].any() and not g.var_features[:, 17:].any()


def test_edges_match_nonzeros():
    rng = np.random.default_rng(3)
    for _ in range(20):
        p = random_lp(rng)
        lp = solve_lp(p)
        if not lp.optimal:
            continue
        g = build_bipartite_graph(p, lp)
        dense = p.A.toarray()
        assert {tuple(e) for e in g.incidence.tolist()} == set(zip(*np.nonzero(dense)))


def test_bipartite_small_example():
    c = np.array([-1.0, -2.0])
    p = make_problem(c, [[-1.0, -2.0], [0.0, 1.0]], [0.0, 1.0], [0, 0], [1, 1], [True, True])
    lp = solve_lp(p)
    g = build_bipartite_graph(p, lp, incumbents=[np.array([1.0, 1.0]), np.array([0.0, 1.0])])
    assert g.cons_features[0, 0] == pytest.approx(1.0)        # row equals c
    col = list(VAR_FEATURES)
    x1 = g.var_features[1]
    assert lp.x[1] == pytest.approx(1.0)
    assert x1[col.index("sol_is_at_ub")] == 1 and x1[col.index("sol_frac")] == 0
    assert x1[col.index("inc_val")] == 1.0 and x1[col.index("avg_inc_val")] == 1.0
    assert g.var_features[0, col.index("avg_inc_val")] == 0.5
    back = BipartiteGraph.from_dict(g.to_dict())
    assert np.array_equal(back.var_features, g.var_features)


def test_bipartite_requires_optimal_lp():
    p = make_problem([0], [[1]], [-1], [0], [1])
    with pytest.raises(GraphError):
        build_bipartite_graph(p, solve_lp(p))


def test_graph_sizes(desk_instance):
    sizes = graph_sizes(desk_instance)
    assert sizes["pi_nodes"] == desk_instance.system.n_buses
    assert sizes["bipartite_nodes"] / sizes["pi_nodes"] >= 10
