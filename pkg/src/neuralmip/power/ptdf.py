"""DC power-flow transfer factors."""

from __future__ import annotations

import numpy as np

from .system import PowerSystemError, SystemSpec, TopologyError


class PtdfNumericalError(PowerSystemError):
    pass


def incidence(system: SystemSpec) -> np.ndarray:
    """Line-by-bus incidence: +1 at the from bus, -1 at the to bus."""
    C = np.zeros((len(system.lines), system.n_buses))
    for k, ln in enumerate(system.lines):
        C[k, system.bus_index(ln.from_bus)] = 1.0
        C[k, system.bus_index(ln.to_bus)] = -1.0
    return C


def compute_ptdf(system: SystemSpec) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(ptdf_gen, ptdf_bus)``.

    ``ptdf_bus[i, l]`` is the flow on line ``l`` (from -> to positive) per MW
    injected at bus ``i`` and withdrawn at the slack bus.  Line susceptance
    is taken as ``1 / reactance``.
    """
    if not system.is_connected():
        raise TopologyError("system graph is not connected")
    C = incidence(system)
    bl = np.array([1.0 / ln.reactance for ln in system.lines])
    Bbus = C.T @ (bl[:, None] * C)
    s = system.bus_index(system.slack_bus)
    keep = [i for i in range(system.n_buses) if i != s]
    Bred = Bbus[np.ix_(keep, keep)]
    if keep:
        cond = np.linalg.cond(Bred)
        if not np.isfinite(cond) or cond > 1e14:
            raise PtdfNumericalError("reduced susceptance matrix is singular")
        X = np.linalg.inv(Bred)
    else:
        X = np.zeros((0, 0))
    theta = np.zeros((system.n_buses, system.n_buses))  # angle per unit injection at bus
    theta[np.ix_(keep, keep)] = X
    flows = (bl[:, None] * C) @ theta                   # lines x injection-bus
    ptdf_bus = flows.T.copy()
    ptdf_bus[s, :] = 0.0
    ptdf_gen = np.array([ptdf_bus[system.bus_index(g.bus)] for g in system.generators])
    return ptdf_gen.reshape(len(system.generators), len(system.lines)), ptdf_bus


def dc_flows(system: SystemSpec, injections: np.ndarray) -> np.ndarray:
    """Solve the DC power flow for a balanced injection vector and return line flows."""
    C = incidence(system)
    bl = np.array([1.0 / ln.reactance for ln in system.lines])
    Bbus = C.T @ (bl[:, None] * C)
    s = system.bus_index(system.slack_bus)
    keep = [i for i in range(system.n_buses) if i != s]
    theta = np.zeros(system.n_buses)
    theta[keep] = np.linalg.solve(Bbus[np.ix_(keep, keep)], np.asarray(injections)[keep])
    return bl * (C @ theta)
