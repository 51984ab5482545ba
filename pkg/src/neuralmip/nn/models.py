"""The physics-informed diving model and the bipartite MILP model."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from ..graphs import (CONS_FEATURES, VAR_FEATURES, BipartiteGraph, SpatialGraph,
                      SpatiotemporalGraph, generator_feature_width, scaled_laplacian)
from . import tensor as T
from .layers import (ShapeError, bipartite_conv, chebyshev_conv, edge_conditioned_conv, glorot,
                     linear, mlp, temporal_gated_conv)
from .tensor import Tensor


@dataclass
class ModelConfig:
    kind: str = "pi-gcn"               # "pi-gcn" or "mb-gcn"
    horizon: int = 12
    seed: int = 0
    # PI-GCN
    max_segments: int = 4
    embed: int = 64
    temporal_channels: int = 16
    cheb_channels: int = 64
    kt: int = 3
    ks: int = 3
    st_blocks: int = 2
    st_fc_hidden: int = 128
    st_out: int = 64
    ec_channels: int = 64
    ec_layers: int = 2
    ec_edge_hidden: int = 16
    ec_fc_hidden: int = 128
    ec_out: int = 128
    vm_ks: int = 9
    vm_channels: int = 64
    vm_fc_hidden: int = 128
    load_shift: float = 0.0
    load_scale: float = 1.0
    # MB-GCN
    mb_embed: int = 24

    def __post_init__(self):
        if self.kind not in ("pi-gcn", "mb-gcn"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        sizes = [v for k, v in asdict(self).items() if isinstance(v, int) and k != "seed"]
        if any(v < 1 for v in sizes):
            raise ValueError("model sizes must be >= 1")
        if self.kt >= self.horizon:
            raise ValueError("temporal kernel must be shorter than the horizon")
        if self.load_scale <= 0:
            raise ValueError("load_scale must be positive")

    @property
    def st_time_out(self) -> int:
        return self.horizon - 2 * self.st_blocks * (self.kt - 1)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


class ParamStore:
    """Ordered, uniquely named trainable tensors."""

    def __init__(self):
        self._params: dict[str, Tensor] = {}

    def add(self, name: str, value) -> Tensor:
        if name in self._params:
            raise KeyError(f"duplicate parameter {name}")
        t = T.parameter(value)
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def zero_grad(self) -> None:
        for t in self._params.values():
            t.grad = None

    def grads(self) -> dict[str, np.ndarray]:
        return {k: (t.grad if t.grad is not None else np.zeros_like(t.value))
                for k, t in self._params.items()}

    def values(self) -> dict[str, np.ndarray]:
        return {k: t.value for k, t in self._params.items()}

    def copy(self) -> "ParamStore":
        out = ParamStore()
        for k, t in self._params.items():
            out.add(k, t.value.copy())
        return out

    def n_parameters(self) -> int:
        return int(sum(t.value.size for t in self._params.values()))


# -- initialization --------------------------------------------------------------

def _dense(ps: ParamStore, rng, name: str, n_in: int, n_out: int, bias: bool = True) -> None:
    ps.add(name + "_W", glorot(rng, (n_in, n_out)))
    if bias:
        ps.add(name + "_b", np.zeros(n_out))


def init_params(config: ModelConfig) -> ParamStore:
    rng = np.random.default_rng(config.seed)
    ps = ParamStore()
    if config.kind == "pi-gcn":
        _init_pi(ps, rng, config)
    else:
        _init_mb(ps, rng, config)
    return ps


def _init_pi(ps: ParamStore, rng, c: ModelConfig) -> None:
    if c.st_time_out < 1:
        raise ShapeError(f"horizon {c.horizon} too short for {c.st_blocks} spatiotemporal blocks")
    _dense(ps, rng, "emb", 1, c.embed)
    cin = c.embed
    for b in range(c.st_blocks):
        p = f"st{b}"
        for tname, a, z in (("t1", cin, c.temporal_channels),
                            ("t2", c.cheb_channels, c.temporal_channels)):
            fan_in, fan_out = c.kt * a, c.kt * z
            ps.add(f"{p}_{tname}_W", glorot(rng, (c.kt, a, z), fan_in, fan_out))
            ps.add(f"{p}_{tname}_V", glorot(rng, (c.kt, a, z), fan_in, fan_out))
            ps.add(f"{p}_{tname}_bw", np.zeros(z))
            ps.add(f"{p}_{tname}_bv", np.zeros(z))
        for k in range(c.ks):
            ps.add(f"{p}_cheb_W{k}", glorot(rng, (c.temporal_channels, c.cheb_channels)))
        ps.add(f"{p}_cheb_b", np.zeros(c.cheb_channels))
        cin = c.temporal_channels
    _dense(ps, rng, "st_fc1", c.st_time_out * c.temporal_channels, c.st_fc_hidden)
    _dense(ps, rng, "st_fc2", c.st_fc_hidden, c.st_out)

    cin = generator_feature_width(c.max_segments)
    for layer in range(c.ec_layers):
        p = f"ec{layer}"
        _dense(ps, rng, p, cin, c.ec_channels)
        _dense(ps, rng, p + "_h1", 4, c.ec_edge_hidden)
        ps.add(p + "_h2_W", glorot(rng, (c.ec_edge_hidden, c.ec_channels * cin),
                                   c.ec_edge_hidden + cin, c.ec_channels))
        ps.add(p + "_h2_b", np.zeros(c.ec_channels * cin))
        cin = c.ec_channels
    _dense(ps, rng, "ec_fc1", c.ec_channels, c.ec_fc_hidden)
    _dense(ps, rng, "ec_fc2", c.ec_fc_hidden, c.ec_out)

    merged = c.st_out + c.ec_out
    for k in range(c.vm_ks):
        ps.add(f"vm_cheb_W{k}", glorot(rng, (merged, c.vm_channels)))
    ps.add("vm_cheb_b", np.zeros(c.vm_channels))
    _dense(ps, rng, "vm_fc1", c.vm_channels, c.vm_fc_hidden)
    _dense(ps, rng, "vm_fc2", c.vm_fc_hidden, c.horizon)


def _init_mb(ps: ParamStore, rng, c: ModelConfig) -> None:
    e = c.mb_embed
    _dense(ps, rng, "cemb1", len(CONS_FEATURES), e)
    _dense(ps, rng, "cemb2", e, e)
    _dense(ps, rng, "vemb1", len(VAR_FEATURES), e)
    _dense(ps, rng, "vemb2", e, e)
    for p in ("vc", "cv"):
        ps.add(p + "_WC", glorot(rng, (e, e)))
        ps.add(p + "_WV", glorot(rng, (e, e)))
        ps.add(p + "_WE", glorot(rng, (1, e)))
        ps.add(p + "_b", np.zeros(e))
    _dense(ps, rng, "out1", e, e)
    _dense(ps, rng, "out2", e, 1)


# -- PI-GCN -------------------------------------------------------------------------

def _maxabs_scale(a: np.ndarray) -> np.ndarray:
    if a.size == 0:
        return a
    s = np.abs(a).max(axis=0)
    return a / np.where(s > 0, s, 1.0)


@dataclass
class PiInputs:
    """Constant inputs of one forward pass, precomputed once per instance."""

    loads: np.ndarray
    gen_feats: np.ndarray
    edge_feats: np.ndarray
    edges: np.ndarray
    lap: np.ndarray
    gen_rows: np.ndarray
    extra: dict = field(default_factory=dict)


def pi_inputs(st: SpatiotemporalGraph, spg: SpatialGraph, config: ModelConfig) -> PiInputs:
    lap = scaled_laplacian(st.adjacency).matrix
    loads = (np.asarray(st.node_features, float) - config.load_shift) / config.load_scale
    return PiInputs(loads,
                    _maxabs_scale(np.asarray(spg.node_features, float)),
                    _maxabs_scale(np.asarray(spg.edge_features, float)),
                    np.asarray(spg.edges, int), lap, np.asarray(spg.gen_rows, int))


def pi_gcn_forward(st: SpatiotemporalGraph | PiInputs, spg: SpatialGraph | None, params: ParamStore,
                   config: ModelConfig, gen_rows: np.ndarray | None = None) -> Tensor:
    """Logits of shape |G| x T.

    ``st`` may be a precomputed :class:`PiInputs`, in which case ``spg`` is ignored.
    """
    c = config
    inp = st if isinstance(st, PiInputs) else pi_inputs(st, spg, c)
    rows = inp.gen_rows if gen_rows is None else np.asarray(gen_rows, int)
    N, Tn, _ = inp.loads.shape
    if Tn != c.horizon:
        raise ShapeError(f"instance horizon {Tn} differs from model horizon {c.horizon}")
    if c.st_time_out < 1:
        raise ShapeError(f"horizon {Tn} too short for the spatiotemporal blocks")
    P = params

    x = linear(T.Tensor(inp.loads.reshape(N * Tn, 1)), P["emb_W"], P["emb_b"])
    x = T.reshape(x, (N, Tn, c.embed))
    for b in range(c.st_blocks):
        p = f"st{b}"
        x = temporal_gated_conv(x, P[p + "_t1_W"], P[p + "_t1_V"], P[p + "_t1_bw"], P[p + "_t1_bv"])
        x = chebyshev_conv(x, inp.lap, [P[f"{p}_cheb_W{k}"] for k in range(c.ks)], P[p + "_cheb_b"])
        x = T.relu(x)
        x = temporal_gated_conv(x, P[p + "_t2_W"], P[p + "_t2_V"], P[p + "_t2_bw"], P[p + "_t2_bv"])
    x = T.reshape(x, (N, c.st_time_out * c.temporal_channels))
    h_st = mlp(x, [(P["st_fc1_W"], P["st_fc1_b"]), (P["st_fc2_W"], P["st_fc2_b"])], final_relu=True)

    g = T.Tensor(inp.gen_feats)
    e = T.Tensor(inp.edge_feats)
    for layer in range(c.ec_layers):
        p = f"ec{layer}"
        g = edge_conditioned_conv(g, e, inp.edges, P[p + "_W"],
                                  [(P[p + "_h1_W"], P[p + "_h1_b"]), (P[p + "_h2_W"], P[p + "_h2_b"])],
                                  P[p + "_b"])
        g = T.relu(g)
    h_ec = mlp(g, [(P["ec_fc1_W"], P["ec_fc1_b"]), (P["ec_fc2_W"], P["ec_fc2_b"])], final_relu=True)

    h = T.concat([h_st, h_ec], axis=1)
    h = T.relu(chebyshev_conv(h, inp.lap, [P[f"vm_cheb_W{k}"] for k in range(c.vm_ks)],
                              P["vm_cheb_b"]))
    h = T.index(h, rows)
    return mlp(h, [(P["vm_fc1_W"], P["vm_fc1_b"]), (P["vm_fc2_W"], P["vm_fc2_b"])])


# -- MB-GCN -------------------------------------------------------------------------

def signed_log(a: np.ndarray) -> np.ndarray:
    return np.sign(a) * np.log1p(np.abs(a))


@dataclass
class MbInputs:
    cons: np.ndarray
    var: np.ndarray
    agg_cv: sp.csr_matrix      # constraint x variable incidence
    agg_vc: sp.csr_matrix      # variable x constraint incidence
    edge_sum_c: np.ndarray
    edge_sum_v: np.ndarray


def mb_inputs(graph: BipartiteGraph) -> MbInputs:
    m, n = graph.cons_features.shape[0], graph.var_features.shape[0]
    rows, cols = graph.incidence[:, 0], graph.incidence[:, 1]
    agg_cv = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(m, n))
    e = graph.edge_features[:, 0]
    es_c = np.zeros((m, 1))
    np.add.at(es_c[:, 0], rows, e)
    es_v = np.zeros((n, 1))
    np.add.at(es_v[:, 0], cols, e)
    return MbInputs(signed_log(graph.cons_features), signed_log(graph.var_features), agg_cv,
                    agg_cv.T.tocsr(), es_c, es_v)


def mb_gcn_forward(graph: BipartiteGraph | MbInputs, params: ParamStore, columns=None) -> Tensor:
    """One logit per requested variable column (default: every binary column)."""
    inp = graph if isinstance(graph, MbInputs) else mb_inputs(graph)
    if columns is None:
        if isinstance(graph, MbInputs):
            raise ValueError("columns are required when passing precomputed inputs")
        columns = graph.binary_columns
    P = params
    cx = mlp(T.Tensor(inp.cons), [(P["cemb1_W"], P["cemb1_b"]), (P["cemb2_W"], P["cemb2_b"])],
             final_relu=True)
    vx = mlp(T.Tensor(inp.var), [(P["vemb1_W"], P["vemb1_b"]), (P["vemb2_W"], P["vemb2_b"])],
             final_relu=True)
    cx = T.relu(bipartite_conv(cx, vx, inp.agg_cv, inp.edge_sum_c, P["vc_WC"], P["vc_WV"],
                               P["vc_WE"], P["vc_b"]))
    vx = T.relu(bipartite_conv(vx, cx, inp.agg_vc, inp.edge_sum_v, P["cv_WC"], P["cv_WV"],
                               P["cv_WE"], P["cv_b"]))
    vx = T.index(vx, np.asarray(columns, dtype=int))
    out = mlp(vx, [(P["out1_W"], P["out1_b"]), (P["out2_W"], P["out2_b"])])
    return T.reshape(out, (len(columns),))
