"""Diving and branching objectives and the per-dimension accuracy metric."""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .tensor import Tensor, stable_sigmoid


def diving_prob(y, x) -> np.ndarray:
    """Bernoulli probability of outcome ``x`` under logit ``y``, via log-space."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x)
    signed = np.where(x == 1, y, -y)
    return np.exp(np.minimum(signed, 0.0) - np.log1p(np.exp(-np.abs(signed))))


def objective_weights(objectives, beta: float, normalizer: tuple[float, float]) -> np.ndarray:
    """exp(-beta * C_hat) with C_hat min-max scaled by ``normalizer = (c_min, c_max)``."""
    c = np.asarray(objectives, dtype=float)
    lo, hi = normalizer
    span = hi - lo
    c_hat = (c - lo) / span if span > 0 else np.zeros_like(c)
    return np.exp(-beta * c_hat)


def diving_loss(logits, targets, objectives, beta: float = 1.0,
                normalizer: tuple[float, float] | None = None) -> Tensor:
    """Weighted negative log-likelihood, summed over dimensions, averaged over instances.

    ``logits`` is a list of D-length tensors (one per instance) or one N x D tensor.
    """
    if isinstance(logits, Tensor):
        logits = [T.index(logits, i) for i in range(logits.shape[0])] if logits.value.ndim == 2 \
            else [logits]
    targets = np.asarray(targets)
    if targets.ndim == 1:
        targets = targets[None, :]
    if not np.all((targets == 0) | (targets == 1)):
        raise ValueError("diving targets must be binary")
    if len(logits) != len(targets):
        raise ValueError("one target row per instance is required")
    objectives = np.atleast_1d(np.asarray(objectives, dtype=float))
    if normalizer is None:
        normalizer = (float(objectives.min()), float(objectives.max()))
    w = objective_weights(objectives, beta, normalizer)
    total = None
    for y, x, wi in zip(logits, targets, w):
        sign = np.where(x.reshape(y.shape) == 1, 1.0, -1.0)
        ll = T.sum_(T.log_sigmoid(T.mul(y, sign)))
        term = T.mul(ll, -float(wi))
        total = term if total is None else T.add(total, term)
    return T.mul(total, 1.0 / len(logits))


def branching_loss(logits: Tensor, chosen: int) -> Tensor:
    """Softmax cross-entropy of the chosen candidate."""
    if not 0 <= chosen < logits.shape[0]:
        raise IndexError("chosen index out of range")
    return T.add(T.logsumexp(logits), T.neg(T.index(logits, int(chosen))))


def accuracy_per_dim(probs, targets) -> np.ndarray:
    """Share of instances whose rounded probability (floor(p + 1/2)) equals the target."""
    p = np.asarray(probs, dtype=float)
    t = np.asarray(targets)
    if p.shape != t.shape:
        raise ValueError("probs and targets must have the same shape")
    pred = np.floor(p + 0.5)
    return (pred == t).mean(axis=0)


def probabilities(logits) -> np.ndarray:
    return stable_sigmoid(np.asarray(logits.value if isinstance(logits, Tensor) else logits))

