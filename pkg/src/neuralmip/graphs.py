"""Graph encodings of UC instances and of MILP node states."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .milp.problem import MilpProblem
from .milp.simplex import BasisStatus, LpSolution, LpStatus
from .power.system import SystemSpec, UcInstance

MAX_SEGMENTS = 4
CONS_FEATURES = ("obj_cos_sim", "bias", "is_tight", "dual_sol_val", "age")
VAR_FEATURES = (
    "type_binary", "type_integer", "type_implicit_integer", "type_continuous",
    "coef", "has_lb", "has_ub", "sol_is_at_lb", "sol_is_at_ub", "sol_frac",
    "basis_lower", "basis_basic", "basis_upper", "basis_zero",
    "reduced_cost", "age", "sol_val", "inc_val", "avg_inc_val",
)
TIGHT_TOL = 1e-6


class GraphError(ValueError):
    pass


def _array_dict(obj, names) -> dict:
    return {k: np.asarray(getattr(obj, k)).tolist() for k in names}


@dataclass(frozen=True, eq=False)
class SpatiotemporalGraph:
    node_features: np.ndarray     # N x T x 1
    adjacency: np.ndarray         # N x N

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_edges(self) -> int:
        return int(np.count_nonzero(np.triu(self.adjacency)))

    def to_dict(self) -> dict:
        return _array_dict(self, ("node_features", "adjacency"))

    @classmethod
    def from_dict(cls, d: dict) -> "SpatiotemporalGraph":
        return cls(np.array(d["node_features"], dtype=float), np.array(d["adjacency"], dtype=float))


@dataclass(frozen=True, eq=False)
class SpatialGraph:
    node_features: np.ndarray     # N x F_g
    edge_features: np.ndarray     # E x 4
    edges: np.ndarray             # E x 2 bus positions, i < j
    adjacency: np.ndarray         # N x N
    gen_mask: np.ndarray          # N booleans: bus hosts a generator
    gen_rows: np.ndarray          # bus position of each generator, in generator order

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    def to_dict(self) -> dict:
        return _array_dict(self, ("node_features", "edge_features", "edges", "adjacency",
                                  "gen_mask", "gen_rows"))

    @classmethod
    def from_dict(cls, d: dict) -> "SpatialGraph":
        return cls(np.array(d["node_features"], dtype=float),
                   np.array(d["edge_features"], dtype=float).reshape(-1, 4),
                   np.array(d["edges"], dtype=int).reshape(-1, 2),
                   np.array(d["adjacency"], dtype=float),
                   np.array(d["gen_mask"], dtype=bool),
                   np.array(d["gen_rows"], dtype=int))


@dataclass(frozen=True, eq=False)
class BipartiteGraph:
    cons_features: np.ndarray     # m x 5
    var_features: np.ndarray      # n x 19
    edge_features: np.ndarray     # nnz x 1
    incidence: np.ndarray         # nnz x 2 (row, col)
    binary_columns: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.cons_features.shape[0] + self.var_features.shape[0]

    @property
    def n_edges(self) -> int:
        return self.incidence.shape[0]

    def to_dict(self) -> dict:
        return _array_dict(self, ("cons_features", "var_features", "edge_features", "incidence",
                                  "binary_columns"))

    @classmethod
    def from_dict(cls, d: dict) -> "BipartiteGraph":
        return cls(np.array(d["cons_features"], dtype=float).reshape(-1, len(CONS_FEATURES)),
                   np.array(d["var_features"], dtype=float).reshape(-1, len(VAR_FEATURES)),
                   np.array(d["edge_features"], dtype=float).reshape(-1, 1),
                   np.array(d["incidence"], dtype=int).reshape(-1, 2),
                   np.array(d["binary_columns"], dtype=int))


@dataclass(frozen=True, eq=False)
class ScaledLaplacian:
    matrix: np.ndarray
    lambda_max: float


# -- physics graphs ----------------------------------------------------------

def _merged_edges(system: SystemSpec):
    """Undirected bus-position pairs with parallel lines merged (first line's
    reactance/susceptance, capacities summed)."""
    merged: dict[tuple[int, int], list[float]] = {}
    for ln in system.lines:
        i, j = sorted((system.bus_index(ln.from_bus), system.bus_index(ln.to_bus)))
        if (i, j) in merged:
            merged[(i, j)][0] += ln.f_pos
            merged[(i, j)][1] += ln.f_neg
        else:
            merged[(i, j)] = [ln.f_pos, ln.f_neg, ln.reactance, ln.susceptance]
    keys = sorted(merged)
    edges = np.array(keys, dtype=int).reshape(-1, 2)
    feats = np.array([merged[k] for k in keys], dtype=float).reshape(-1, 4)
    return edges, feats


def _adjacency(n: int, edges: np.ndarray) -> np.ndarray:
    adj = np.zeros((n, n))
    for i, j in edges:
        adj[i, j] = adj[j, i] = 1.0
    return adj


def build_spatiotemporal_graph(instance: UcInstance) -> SpatiotemporalGraph:
    system = instance.system
    edges, _ = _merged_edges(system)
    feats = np.asarray(instance.scenario.d, dtype=float)[:, :, None].copy()
    return SpatiotemporalGraph(feats, _adjacency(system.n_buses, edges))


def generator_feature_width(max_segments: int = MAX_SEGMENTS) -> int:
    return 2 * (max_segments + 1) + 6


def _pad(values, length: int) -> list[float]:
    values = list(values)
    if len(values) > length:
        raise GraphError(f"{len(values)} breakpoints exceed the configured width {length}")
    return values + [values[-1]] * (length - len(values))


def build_spatial_graph(instance: UcInstance, max_segments: int = MAX_SEGMENTS) -> SpatialGraph:
    system = instance.system
    n = system.n_buses
    width = generator_feature_width(max_segments)
    feats = np.zeros((n, width))
    mask = np.zeros(n, dtype=bool)
    rows = []
    for g in system.generators:
        i = system.bus_index(g.bus)
        if mask[i]:
            raise GraphError(f"bus {g.bus} hosts more than one generator")
        mask[i] = True
        rows.append(i)
        feats[i] = (_pad(g.pb, max_segments + 1) + _pad(g.cb, max_segments + 1)
                    + [g.ru, g.rd, g.su, g.sd, float(g.v0), g.p0])
    edges, efeats = _merged_edges(system)
    return SpatialGraph(feats, efeats, edges, _adjacency(n, edges), mask, np.array(rows, dtype=int))


def scaled_laplacian(adjacency, tol: float = 1e-9, seed: int = 0, max_iter: int = 100_000) -> ScaledLaplacian:
    """Normalized Laplacian rescaled to spectrum [-1, 1].

    The top eigenvalue comes from power iteration on a seeded random start,
    stopped when the eigen-residual drops below ``tol``.
    """
    adj = np.asarray(adjacency, dtype=float)
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise GraphError("adjacency must be square")
    if not np.allclose(adj, adj.T) or np.any(np.diag(adj) != 0):
        raise GraphError("adjacency must be symmetric without self-loops")
    deg = adj.sum(axis=1)
    if np.any(deg <= 0):
        raise GraphError("isolated node: degree matrix is singular")
    dinv = 1.0 / np.sqrt(deg)
    lap = np.eye(len(adj)) - dinv[:, None] * adj * dinv[None, :]
    lap = 0.5 * (lap + lap.T)
    v = np.random.default_rng(seed).uniform(0.5, 1.5, size=len(adj))
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = lap @ v
        lam = float(v @ w)
        if np.linalg.norm(w - lam * v) <= tol:
            break
        v = w / np.linalg.norm(w)
    if lam <= 0:
        raise GraphError("graph has no edges")
    scaled = 2.0 * lap / lam - np.eye(len(adj))
    return ScaledLaplacian(0.5 * (scaled + scaled.T), lam)


# -- MILP bipartite graph ----------------------------------------------------

def build_bipartite_graph(problem: MilpProblem, lp: LpSolution, incumbents=(),
                          ages=None) -> BipartiteGraph:
    """Constraint/variable bipartite encoding of a node's LP state.

    ``ages`` is ``(var_age, cons_age)``; omitted ages are zero (root node).
    """
    if lp.status is not LpStatus.OPTIMAL:
        raise GraphError("bipartite features need an optimal LP solution")
    A = problem.A.tocsr().copy()
    A.eliminate_zeros()
    m, n = problem.m, problem.n
    c = problem.c
    c_norm = float(np.linalg.norm(c))
    row_norm = np.sqrt(np.asarray(A.multiply(A).sum(axis=1)).ravel())
    row_norm = np.where(row_norm > 0, row_norm, 1.0)
    var_age, cons_age = (np.zeros(n), np.zeros(m)) if ages is None else ages
    x = lp.x

    cons = np.zeros((m, len(CONS_FEATURES)))
    cons[:, 0] = (A @ c) / (row_norm * c_norm) if c_norm > 0 else 0.0
    cons[:, 1] = problem.b / row_norm
    cons[:, 2] = np.abs(A @ x - problem.b) <= TIGHT_TOL
    cons[:, 3] = lp.duals / np.maximum(np.abs(problem.b), 1.0)
    cons[:, 4] = cons_age

    l, u = problem.l, problem.u
    ints = problem.is_integer
    binary = ints & (l >= 0) & (u <= 1)
    var = np.zeros((n, len(VAR_FEATURES)))
    var[:, 0] = binary
    var[:, 1] = ints & ~binary
    var[:, 3] = ~ints
    var[:, 4] = c / c_norm if c_norm > 0 else 0.0
    var[:, 5] = np.isfinite(l)
    var[:, 6] = np.isfinite(u)
    var[:, 7] = np.isfinite(l) & (np.abs(x - l) <= TIGHT_TOL)
    var[:, 8] = np.isfinite(u) & (np.abs(x - u) <= TIGHT_TOL)
    var[:, 9] = np.where(ints, np.abs(x - np.round(x)), 0.0)
    basis = np.asarray(lp.basis, dtype=int)
    for k, st in enumerate((BasisStatus.LOWER, BasisStatus.BASIC, BasisStatus.UPPER,
                            BasisStatus.ZERO)):
        var[:, 10 + k] = basis == st
    var[:, 14] = lp.reduced_costs / c_norm if c_norm > 0 else lp.reduced_costs
    var[:, 15] = var_age
    var[:, 16] = x
    if len(incumbents):
        inc = np.asarray(incumbents, dtype=float).reshape(len(incumbents), n)
        var[:, 17] = inc[-1]
        var[:, 18] = inc.mean(axis=0)

    coo = A.tocoo()
    order = np.lexsort((coo.col, coo.row))
    rows, cols, vals = coo.row[order], coo.col[order], coo.data[order]
    row_max = np.zeros(m)
    np.maximum.at(row_max, rows, np.abs(vals))
    edge = (vals / row_max[rows])[:, None]
    inc_idx = np.stack([rows, cols], axis=1).astype(int)
    return BipartiteGraph(cons, var, edge, inc_idx, np.flatnonzero(binary))


def bipartite_from_context(ctx) -> BipartiteGraph:
    """Bipartite graph of a branch-and-bound node."""
    return build_bipartite_graph(ctx.problem, ctx.lp, ctx.incumbents, (ctx.var_age, ctx.cons_age))


def graph_sizes(instance: UcInstance, problem: MilpProblem | None = None) -> dict:
    from .power.ucmodel import build_uc_milp

    if problem is None:
        problem, _ = build_uc_milp(instance)
    st = build_spatiotemporal_graph(instance)
    return {
        "pi_nodes": st.n_nodes,
        "pi_edges": st.n_edges,
        "bipartite_nodes": problem.m + problem.n,
        "bipartite_edges": int(sp.csr_matrix(problem.A).nnz),
    }


def dumps(graph) -> str:
    return json.dumps(graph.to_dict(), sort_keys=True)
