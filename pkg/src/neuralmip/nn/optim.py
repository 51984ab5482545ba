"""Adam, the gradient checker and training hyperparameters."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .models import ParamStore
from .tensor import Tensor

BETA1, BETA2, ADAM_EPS = 0.9, 0.999, 1e-8


@dataclass
class TrainConfig:
    learning_rate: float = 0.005
    epochs: int = 1000
    batch_size: int = 1
    patience: int = 50
    early_stop: int = 100
    beta: float = 1.0
    epoch_size: int | None = None      # instances per epoch; None means the whole split
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.epochs < 1 or self.patience < 0 or self.early_stop < 0:
            raise ValueError("training hyperparameters must be positive")
        if self.batch_size != 1:
            raise ValueError("only batch size 1 is supported")
        if self.beta < 0:
            raise ValueError("beta must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class AdamState:
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: ParamStore, grads: dict[str, np.ndarray], state: AdamState, lr: float) -> None:
    """One bias-corrected Adam update, in place."""
    state.t += 1
    c1 = 1.0 - BETA1 ** state.t
    c2 = 1.0 - BETA2 ** state.t
    for name, p in params.items():
        g = grads[name]
        m = state.m.get(name)
        v = state.v.get(name)
        m = (1 - BETA1) * g if m is None else BETA1 * m + (1 - BETA1) * g
        v = (1 - BETA2) * g * g if v is None else BETA2 * v + (1 - BETA2) * g * g
        state.m[name], state.v[name] = m, v
        p.value = p.value - lr * (m / c1) / (np.sqrt(v / c2) + ADAM_EPS)


@dataclass
class GradCheckReport:
    max_rel_error: float
    per_tensor: dict[str, float]
    tol_rel: float
    coords_checked: int

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tol_rel


def finite_diff_check(loss_fn: Callable[[ParamStore], Tensor], params: ParamStore,
                      step: float = 1e-6, tol_rel: float = 1e-4, n_coords: int = 50,
                      seed: int = 0, grads: dict[str, np.ndarray] | None = None) -> GradCheckReport:
    """Compare analytic gradients with central differences on sampled coordinates.

    For each tensor, up to ``n_coords`` coordinates (all of them when the
    tensor is smaller) are perturbed by +/- ``step``.  The error of a tensor
    is ||g_analytic - g_numeric|| / max(||g_analytic||, ||g_numeric||, 1e-12)
    over the sampled coordinates.  ``grads`` overrides the analytic gradients.
    """
    if grads is None:
        params.zero_grad()
        loss_fn(params).backward()
        grads = params.grads()
    rng = np.random.default_rng(seed)
    per: dict[str, float] = {}
    total = 0
    for name, p in params.items():
        flat = p.value.reshape(-1)
        k = min(n_coords, flat.size)
        idx = rng.choice(flat.size, size=k, replace=False) if k < flat.size else np.arange(flat.size)
        num = np.empty(k)
        for j, i in enumerate(idx):
            orig = flat[i]
            flat[i] = orig + step
            f_plus = loss_fn(params).item()
            flat[i] = orig - step
            f_minus = loss_fn(params).item()
            flat[i] = orig
            num[j] = (f_plus - f_minus) / (2 * step)
        ana = np.asarray(grads[name]).reshape(-1)[idx]
        denom = max(np.linalg.norm(ana), np.linalg.norm(num), 1e-12)
        per[name] = float(np.linalg.norm(ana - num) / denom)
        total += k
    worst = max(per.values()) if per else 0.0
    return GradCheckReport(worst, per, tol_rel, total)
