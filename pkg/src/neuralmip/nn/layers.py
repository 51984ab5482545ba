"""Graph and sequence layers built on the autodiff engine."""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .tensor import Tensor


class ShapeError(ValueError):
    pass


def glorot(rng: np.random.Generator, shape, fan_in: int | None = None,
           fan_out: int | None = None) -> np.ndarray:
    fan_in = fan_in if fan_in is not None else shape[-2] if len(shape) > 1 else shape[0]
    fan_out = fan_out if fan_out is not None else shape[-1]
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def linear(x: Tensor, W: Tensor, b: Tensor | None = None) -> Tensor:
    y = T.matmul(x, W)
    return y if b is None else T.add(y, b)


def mlp(x: Tensor, layers, final_relu: bool = False) -> Tensor:
    """``layers`` is a list of (W, b); ReLU between layers."""
    for k, (W, b) in enumerate(layers):
        x = linear(x, W, b)
        if k < len(layers) - 1 or final_relu:
            x = T.relu(x)
    return x


def temporal_gated_conv(D: Tensor, W: Tensor, V: Tensor, bw: Tensor | None = None,
                        bv: Tensor | None = None) -> Tensor:
    """Gated 1-D convolution along time, no padding.

    ``D`` is N x T x C_in, ``W`` and ``V`` are K_t x C_in x C_out.  Output
    is N x (T - K_t + 1) x C_out: (D * W) elementwise-times sigmoid(D * V).
    """
    N, Tn, C = D.shape
    K = W.shape[0]
    if W.shape[1] != C or V.shape != W.shape:
        raise ShapeError("kernel shapes do not match the input channels")
    if Tn < K:
        raise ShapeError(f"sequence length {Tn} shorter than kernel {K}")
    To = Tn - K + 1
    lin = gate = None
    for k in range(K):
        window = T.reshape(T.index(D, (slice(None), slice(k, k + To), slice(None))), (N * To, C))
        lk = T.matmul(window, T.index(W, k))
        gk = T.matmul(window, T.index(V, k))
        lin = lk if lin is None else T.add(lin, lk)
        gate = gk if gate is None else T.add(gate, gk)
    if bw is not None:
        lin = T.add(lin, bw)
    if bv is not None:
        gate = T.add(gate, bv)
    out = T.mul(lin, T.sigmoid(gate))
    return T.reshape(out, (N, To, W.shape[2]))


def chebyshev_basis(lap: np.ndarray, X: Tensor, K: int) -> list[Tensor]:
    """Z1 = X, Z2 = L X, Zk = 2 L Z(k-1) - Z(k-2); X may carry extra trailing axes."""
    shape = X.shape
    flat = T.reshape(X, (shape[0], -1)) if X.value.ndim > 2 else X
    Z = [flat]
    if K > 1:
        Z.append(T.const_matmul(lap, flat))
    for _ in range(2, K):
        Z.append(T.add(T.mul(T.const_matmul(lap, Z[-1]), 2.0), T.neg(Z[-2])))
    return [T.reshape(z, shape) for z in Z] if X.value.ndim > 2 else Z


def chebyshev_conv(X: Tensor, lap: np.ndarray, weights, bias: Tensor | None = None) -> Tensor:
    """Sum over k of Z(k) W(k); ``X`` is N x C_in or N x T x C_in."""
    Z = chebyshev_basis(lap, X, len(weights))
    shape = X.shape
    out = None
    for z, Wk in zip(Z, weights):
        z2 = T.reshape(z, (-1, shape[-1])) if len(shape) > 2 else z
        term = T.matmul(z2, Wk)
        out = term if out is None else T.add(out, term)
    if bias is not None:
        out = T.add(out, bias)
    if len(shape) > 2:
        out = T.reshape(out, shape[:-1] + (weights[0].shape[1],))
    return out


def directed_pairs(edges: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(target, source, edge-row) for both directions of each undirected edge."""
    edges = np.asarray(edges, dtype=int).reshape(-1, 2)
    tgt = np.concatenate([edges[:, 0], edges[:, 1]])
    src = np.concatenate([edges[:, 1], edges[:, 0]])
    rows = np.concatenate([np.arange(len(edges)), np.arange(len(edges))])
    return tgt, src, rows


def edge_conditioned_conv(nodes: Tensor, edge_feats: Tensor, edges: np.ndarray, W: Tensor,
                          h_layers, bias: Tensor | None = None) -> Tensor:
    """g'_i = W g_i + sum over neighbours j of h(e_ij) g_j.

    ``W`` is C_in x C_out (applied on the right); ``h_layers`` is an MLP whose
    output has C_out * C_in entries, reshaped to a C_out x C_in matrix per edge.
    """
    N, C_in = nodes.shape
    C_out = W.shape[1]
    out = T.matmul(nodes, W)
    tgt, src, rows = directed_pairs(edges)
    if len(tgt):
        H = mlp(T.index(edge_feats, rows), h_layers)
        if H.shape[1] != C_out * C_in:
            raise ShapeError("edge network output does not match C_out x C_in")
        H = T.reshape(H, (len(tgt), C_out, C_in))
        gj = T.reshape(T.index(nodes, src), (len(tgt), 1, C_in))
        msg = T.sum_(T.mul(H, gj), axis=2)
        out = T.add(out, T.scatter_add(msg, tgt, N))
    if bias is not None:
        out = T.add(out, bias)
    return out


def bipartite_conv(target: Tensor, source: Tensor, agg, edge_sum: np.ndarray, W_C: Tensor,
                   W_V: Tensor, W_E: Tensor, bias: Tensor | None = None) -> Tensor:
    """x'_i = W_C x_i + sum_j W_V x_j + sum_j W_E e_ij over incident edges.

    ``agg`` is the constant target x source incidence matrix (ones where an
    edge exists) and ``edge_sum`` the per-target sum of edge features.
    """
    out = T.matmul(target, W_C)
    out = T.add(out, T.matmul(T.const_matmul(agg, source), W_V))
    out = T.add(out, T.matmul(T.Tensor(edge_sum), W_E))
    if bias is not None:
        out = T.add(out, bias)
    return out
