"""A small float64 reverse-mode autodiff engine over numpy arrays."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp


class Tensor:
    __slots__ = ("value", "grad", "parents", "backward_fn", "requires_grad")

    def __init__(self, value, parents=(), backward_fn=None, requires_grad: bool = False):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.parents = parents
        self.backward_fn = backward_fn
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape})"

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(as_tensor(other)))

    def __rsub__(self, other):
        return add(as_tensor(other), neg(self))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return index(self, key)

    def item(self) -> float:
        return float(self.value)

    def backward(self, grad=None) -> None:
        """Accumulate d(self)/d(leaf) into ``.grad`` of every leaf that requires it."""
        order: list[Tensor] = []
        seen: set[int] = set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen or not node.requires_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node.parents:
                if id(p) not in seen:
                    stack.append((p, False))
        grads = {id(self): np.ones_like(self.value) if grad is None else np.asarray(grad, float)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node.backward_fn is None:
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            for p, pg in zip(node.parents, node.backward_fn(g)):
                if pg is None or not p.requires_grad:
                    continue
                if id(p) in grads:
                    grads[id(p)] = grads[id(p)] + pg
                else:
                    grads[id(p)] = pg


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def parameter(value) -> Tensor:
    return Tensor(np.array(value, dtype=np.float64), requires_grad=True)


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return Tensor(a.value + b.value, (a, b),
                  lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def neg(a: Tensor) -> Tensor:
    return Tensor(-a.value, (a,), lambda g: (-g,))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return Tensor(a.value * b.value, (a, b),
                  lambda g: (_unbroadcast(g * b.value, a.shape), _unbroadcast(g * a.value, b.shape)))


def matmul(a, b) -> Tensor:
    """2-D matrix product."""
    a, b = as_tensor(a), as_tensor(b)
    return Tensor(a.value @ b.value, (a, b), lambda g: (g @ b.value.T, a.value.T @ g))


def const_matmul(M, x: Tensor) -> Tensor:
    """``M @ x`` with a constant (dense or sparse) left factor."""
    out = M @ x.value
    Mt = M.T
    return Tensor(np.asarray(out), (x,), lambda g: (np.asarray(Mt @ g),))


def sum_(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    def back(g):
        if axis is None:
            return (np.broadcast_to(g, a.shape).copy(),)
        gg = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(gg, a.shape).copy(),)
    return Tensor(a.value.sum(axis=axis, keepdims=keepdims), (a,), back)


def mean(a: Tensor) -> Tensor:
    return mul(sum_(a), 1.0 / a.value.size)


def reshape(a: Tensor, shape) -> Tensor:
    return Tensor(a.value.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


def transpose(a: Tensor, axes=None) -> Tensor:
    inv = None if axes is None else np.argsort(axes)
    return Tensor(np.transpose(a.value, axes), (a,), lambda g: (np.transpose(g, inv),))


def _basic_key(key) -> bool:
    parts = key if isinstance(key, tuple) else (key,)
    return all(isinstance(k, (int, np.integer, slice)) for k in parts)


def index(a: Tensor, key) -> Tensor:
    basic = _basic_key(key)

    def back(g):
        out = np.zeros_like(a.value)
        if basic:
            out[key] += g
        else:
            np.add.at(out, key, g)
        return (out,)
    return Tensor(a.value[key], (a,), back)


def concat(tensors, axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def back(g):
        return tuple(np.split(g, splits, axis=axis))
    return Tensor(np.concatenate([t.value for t in tensors], axis=axis), tuple(tensors), back)


def scatter_add(src: Tensor, index_: np.ndarray, n_out: int) -> Tensor:
    """Row ``k`` of ``src`` is added into output row ``index_[k]``."""
    idx = np.asarray(index_, dtype=int)
    out = np.zeros((n_out,) + src.shape[1:])
    np.add.at(out, idx, src.value)
    return Tensor(out, (src,), lambda g: (g[idx],))


def relu(a: Tensor) -> Tensor:
    mask = a.value > 0
    return Tensor(a.value * mask, (a,), lambda g: (g * mask,))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid(a: Tensor) -> Tensor:
    s = _sigmoid(a.value)
    return Tensor(s, (a,), lambda g: (g * s * (1.0 - s),))


def log_sigmoid(a: Tensor) -> Tensor:
    x = a.value
    val = np.minimum(x, 0.0) - np.log1p(np.exp(-np.abs(x)))
    s_neg = _sigmoid(-x)
    return Tensor(val, (a,), lambda g: (g * s_neg,))


def exp(a: Tensor) -> Tensor:
    e = np.exp(a.value)
    return Tensor(e, (a,), lambda g: (g * e,))


def logsumexp(a: Tensor) -> Tensor:
    """Log-sum-exp over all entries, shifted by the max for stability."""
    x = a.value
    mx = x.max()
    e = np.exp(x - mx)
    s = e.sum()
    return Tensor(mx + np.log(s), (a,), lambda g: (g * e / s,))


def stable_sigmoid(x: np.ndarray) -> np.ndarray:
    return _sigmoid(np.asarray(x, dtype=np.float64))


def sparse_rows(n_rows: int, n_cols: int, rows, cols, vals=None) -> sp.csr_matrix:
    vals = np.ones(len(rows)) if vals is None else vals
    return sp.csr_matrix((vals, (rows, cols)), shape=(n_rows, n_cols))
