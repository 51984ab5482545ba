"""Synthetic daily load profiles."""

from __future__ import annotations

import numpy as np

from .system import LoadScenario, PowerSystemError

# Normalized 24-hour system load shape (night trough, evening peak).
DAILY_SHAPE_24 = np.array([
    0.62, 0.58, 0.56, 0.55, 0.56, 0.60, 0.67, 0.75, 0.82, 0.86, 0.89, 0.91,
    0.92, 0.93, 0.94, 0.95, 0.97, 1.00, 0.99, 0.96, 0.90, 0.82, 0.74, 0.67,
])


def base_shape(horizon: int) -> np.ndarray:
    """Resample the daily shape to ``horizon`` periods."""
    if horizon == 24:
        return DAILY_SHAPE_24.copy()
    src = np.linspace(0.0, 1.0, 24)
    dst = np.linspace(0.0, 1.0, horizon)
    return np.interp(dst, src, DAILY_SHAPE_24)


def draw_bus_weights(n_buses: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.5, 1.5, size=n_buses)
    return w / w.sum()


def generate_load_scenarios(base_shape: np.ndarray, n: int, peak: float, reserve_fraction: float,
                            noise_sigma: float, seed: int,
                            bus_weights: np.ndarray) -> list[LoadScenario]:
    """Scale ``base_shape`` to ``peak``, split over buses and perturb.

    d[i, t] = peak * shape[t] / max(shape) * w_i * (1 + eta[i, t]),
    eta ~ N(0, noise_sigma), clipped at zero; r[t] = reserve_fraction * sum_i d[i, t].
    """
    shape = np.asarray(base_shape, dtype=float).ravel()
    w = np.asarray(bus_weights, dtype=float).ravel()
    if shape.size < 1 or np.any(shape <= 0):
        raise PowerSystemError("base shape must be positive")
    if not 0 <= noise_sigma < 1:
        raise PowerSystemError("noise_sigma must lie in [0, 1)")
    if reserve_fraction < 0 or peak < 0:
        raise PowerSystemError("peak and reserve_fraction must be non-negative")
    rng = np.random.default_rng(seed)
    scaled = peak * np.outer(w, shape / shape.max())
    out = []
    for _ in range(n):
        eta = rng.normal(0.0, noise_sigma, size=scaled.shape) if noise_sigma > 0 else 0.0
        d = np.maximum(scaled * (1.0 + eta), 0.0)
        out.append(LoadScenario(d, reserve_fraction * d.sum(axis=0)))
    return out
