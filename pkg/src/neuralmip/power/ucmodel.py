"""State-transition unit-commitment model as a general-form MILP.

Periods are 0-based here (``t = 0 .. T-1``).  Terms referring to periods
before the horizon are replaced by constants taken from the generator's
initial state:

* a unit initially on for ``k`` periods has ``x = 1`` for the virtual
  periods ``-k .. -1`` and ``x = 0`` before that; initially off units have
  ``x = 0`` everywhere before the horizon;
* ``s`` and ``z`` are zero before the horizon;
* ``p'`` at period ``-1`` is ``p0 - p_min`` for a unit initially on;
* ``z`` after the horizon is zero.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..milp.problem import MilpProblem
from .system import GeneratorParams, PowerSystemError, UcInstance

KINDS = ("x", "s", "z", "p_above", "p_bar", "f", "v")
BINARY_KINDS = ("x", "s", "z")


class DecodeError(ValueError):
    pass


def segment_slopes(gen: GeneratorParams) -> np.ndarray:
    """Marginal cost of each production-cost segment, $/MW."""
    return slopes_from_breakpoints(gen.pb, gen.cb)


def slopes_from_breakpoints(pb, cb) -> np.ndarray:
    pb = np.asarray(pb, dtype=float)
    cb = np.asarray(cb, dtype=float)
    width = np.diff(pb)
    if np.any(width == 0):
        raise ZeroDivisionError("zero-width production-cost segment")
    return np.diff(cb) / width


# -- initial-condition constants -------------------------------------------

def virtual_x(gen: GeneratorParams, t: int) -> float:
    if t >= 0:
        raise ValueError("virtual_x only covers periods before the horizon")
    if not gen.v0:
        return 0.0
    k = max(int(gen.init_state_periods), 1)
    return 1.0 if t >= -k else 0.0


def initial_p_above(gen: GeneratorParams) -> float:
    return max(gen.p0 - gen.p_min, 0.0) if gen.v0 else 0.0


@dataclass(frozen=True, eq=False)
class VariableMap:
    """Column index <-> (kind, generator, period)."""

    entries: tuple[tuple[str, int, int], ...]
    n_gens: int
    horizon: int
    cu1: np.ndarray = field(repr=False)
    cb1: np.ndarray = field(repr=False)

    def __post_init__(self):
        cols = {k: np.full((self.n_gens, self.horizon), -1, dtype=int) for k in KINDS}
        for j, (kind, g, t) in enumerate(self.entries):
            cols[kind][g, t] = j
        for k, arr in cols.items():
            if np.any(arr < 0):
                raise ValueError(f"variable map lacks some {k} columns")
            arr.setflags(write=False)
        object.__setattr__(self, "_cols", cols)

    def __len__(self) -> int:
        return len(self.entries)

    def columns(self, kind: str) -> np.ndarray:
        """|G| x T array of column indices for ``kind``."""
        return self._cols[kind]

    def col(self, kind: str, g: int, t: int) -> int:
        return int(self._cols[kind][g, t])

    @property
    def x_columns(self) -> np.ndarray:
        """Columns of the state variables x in (generator, period) row-major order."""
        return self._cols["x"].ravel()

    def permuted(self, perm: np.ndarray) -> "VariableMap":
        """Map for a problem whose column ``j`` is this problem's column ``perm[j]``."""
        return VariableMap(tuple(self.entries[p] for p in perm), self.n_gens, self.horizon,
                           self.cu1, self.cb1)

    def to_dict(self) -> dict:
        return {"entries": [list(e) for e in self.entries], "n_gens": self.n_gens,
                "horizon": self.horizon, "cu1": self.cu1.tolist(), "cb1": self.cb1.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "VariableMap":
        return cls(tuple((k, int(g), int(t)) for k, g, t in d["entries"]), d["n_gens"],
                   d["horizon"], np.array(d["cu1"]), np.array(d["cb1"]))


class _RowBuilder:
    def __init__(self, vmap_cols, gens, horizon):
        self.cols = vmap_cols
        self.gens = gens
        self.T = horizon
        self.rows: list[dict[int, float]] = []
        self.rhs: list[float] = []
        self.names: list[str] = []

    def var(self, kind: str, g: int, t: int):
        """Column index or the constant standing in for an out-of-horizon term."""
        if 0 <= t < self.T:
            return int(self.cols[kind][g, t]), None
        gen = self.gens[g]
        if t >= self.T:
            if kind == "z":
                return None, 0.0
        elif kind == "x":
            return None, virtual_x(gen, t)
        elif kind in ("s", "z"):
            return None, 0.0
        elif kind == "p_above" and t == -1:
            return None, initial_p_above(gen)
        raise PowerSystemError(f"no boundary value for {kind}[{g}, {t}]")

    def add(self, name: str, terms, rhs: float) -> None:
        """Append ``sum(coef * var) <= rhs``; terms are (coef, kind, g, t)."""
        row: dict[int, float] = defaultdict(float)
        for coef, kind, g, t in terms:
            if coef == 0:
                continue
            j, const = self.var(kind, g, t)
            if j is None:
                rhs -= coef * const
            else:
                row[j] += coef
        row = {j: v for j, v in row.items() if v != 0.0}
        if not row:
            if rhs < -1e-9:
                # constant row that can never hold: keep the infeasibility visible
                self.rows.append({0: 1.0})
                self.rhs.append(-1.0)
                self.names.append(name + "!infeasible")
            return
        self.rows.append(row)
        self.rhs.append(float(rhs))
        self.names.append(name)

    def matrix(self, n: int) -> sp.csr_matrix:
        indptr = [0]
        indices, data = [], []
        for row in self.rows:
            for j in sorted(row):
                indices.append(j)
                data.append(row[j])
            indptr.append(len(indices))
        return sp.csr_matrix((data, indices, indptr), shape=(len(self.rows), n))


def build_uc_milp(instance: UcInstance) -> tuple[MilpProblem, VariableMap]:
    gens = instance.generators
    G, T = len(gens), instance.horizon
    entries = [(kind, g, t) for kind in KINDS for g in range(G) for t in range(T)]
    cu1 = np.array([g.cu[0] for g in gens])
    cb1 = np.array([g.cb[0] for g in gens])
    vmap = VariableMap(tuple(entries), G, T, cu1, cb1)
    n = len(entries)

    c = np.zeros(n)
    l = np.zeros(n)
    u = np.full(n, np.inf)
    is_int = np.zeros(n, dtype=bool)
    for g, gen in enumerate(gens):
        for t in range(T):
            for kind in BINARY_KINDS:
                j = vmap.col(kind, g, t)
                u[j] = 1.0
                is_int[j] = True
            u[vmap.col("p_above", g, t)] = gen.p_max - gen.p_min
            u[vmap.col("p_bar", g, t)] = gen.p_max
            c[vmap.col("f", g, t)] = 1.0
            c[vmap.col("v", g, t)] = 1.0
            c[vmap.col("s", g, t)] = gen.cu[0] + gen.cb[0]
            c[vmap.col("x", g, t)] = gen.cb[0]

    rb = _RowBuilder({k: vmap.columns(k) for k in KINDS}, gens, T)
    demand = instance.scenario.d.sum(axis=0)
    reserve = instance.scenario.r
    for t in range(T):
        terms = []
        for g, gen in enumerate(gens):
            terms += [(-1.0, "p_above", g, t), (-gen.p_min, "s", g, t), (-gen.p_min, "x", g, t)]
        rb.add(f"load[{t}]", terms, -demand[t])
        rb.add(f"reserve[{t}]", [(-1.0, "p_bar", g, t) for g in range(G)],
               -(demand[t] + reserve[t]))

    for g, gen in enumerate(gens):
        vc = segment_slopes(gen)
        for t in range(T):
            rb.add(f"gen_lower[{g},{t}]", [(1.0, "p_above", g, t), (gen.p_min, "s", g, t),
                                           (gen.p_min, "x", g, t), (-1.0, "p_bar", g, t)], 0.0)
            rb.add(f"gen_upper[{g},{t}]", [(1.0, "p_bar", g, t), (-gen.p_max, "s", g, t),
                                           (-gen.p_max, "x", g, t),
                                           (-(gen.sd - gen.p_max), "z", g, t + 1)], 0.0)
            window = [(1.0, "s", g, i) for i in range(t - gen.ut + 1, t)]
            if any(0 <= i < T for _, _, _, i in window):
                rb.add(f"min_up[{g},{t}]", window + [(-1.0, "x", g, t)], 0.0)
            rb.add(f"min_down[{g},{t}]",
                   [(1.0, "s", g, i) for i in range(t - gen.dt, t + 1)]
                   + [(1.0, "x", g, t - gen.dt)], 1.0)
            rb.add(f"ramp_up[{g},{t}]", [(1.0, "p_bar", g, t), (-1.0, "p_above", g, t - 1),
                                         (-gen.su, "s", g, t),
                                         (-(gen.ru + gen.p_min), "x", g, t)], 0.0)
            rb.add(f"ramp_down[{g},{t}]", [(1.0, "p_above", g, t - 1), (-1.0, "p_above", g, t),
                                           (-(gen.sd - gen.p_min), "z", g, t),
                                           (-gen.rd, "x", g, t)], 0.0)
            trans = [(1.0, "s", g, t - 1), (1.0, "x", g, t - 1), (-1.0, "z", g, t),
                     (-1.0, "x", g, t)]
            rb.add(f"transition_le[{g},{t}]", trans, 0.0)
            rb.add(f"transition_ge[{g},{t}]", [(-a, k, gg, tt) for a, k, gg, tt in trans], 0.0)
            rb.add(f"on_exclusive[{g},{t}]", [(1.0, "s", g, t), (1.0, "x", g, t)], 1.0)
            for k in range(1, len(gen.cu)):
                w = gen.cu[k] - gen.cu[0]
                if w == 0:
                    continue
                nd = gen.nd[k]
                terms = [(w, "s", g, t)]
                terms += [(-w, "s", g, t - i) for i in range(gen.dt, nd + 1)]
                terms += [(-w, "x", g, t - nd), (-1.0, "f", g, t)]
                rb.add(f"startup_cost[{g},{t},{k}]", terms, 0.0)
            for k in range(gen.nl):
                rhs = -vc[k] * (gen.p_min - gen.pb[k]) - (gen.cb[k] - gen.cb[0])
                rb.add(f"prod_cost[{g},{t},{k}]",
                       [(vc[k], "p_above", g, t), (-1.0, "v", g, t)], rhs)

    ptdf_g, ptdf_b = instance.ptdf_gen, instance.ptdf_bus
    d = instance.scenario.d
    for m, line in enumerate(instance.system.lines):
        for t in range(T):
            load_flow = float(d[:, t] @ ptdf_b[:, m])
            terms = []
            for g, gen in enumerate(gens):
                a = ptdf_g[g, m]
                terms += [(a, "p_above", g, t), (a * gen.p_min, "s", g, t),
                          (a * gen.p_min, "x", g, t)]
            rb.add(f"line_pos[{m},{t}]", terms, line.f_pos + load_flow)
            rb.add(f"line_neg[{m},{t}]", [(-a, k, gg, tt) for a, k, gg, tt in terms],
                   -line.f_neg - load_flow)

    A = rb.matrix(n)
    col_names = tuple(f"{k}[{g},{t}]" for k, g, t in entries)
    problem = MilpProblem(c, A, np.array(rb.rhs), l, u, is_int, tuple(rb.names), col_names)
    return problem, vmap


def binary_count(instance: UcInstance) -> int:
    """Number of binary columns: three per (generator, period); no boundary binaries."""
    return 3 * len(instance.generators) * instance.horizon


# -- schedules --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class UcSchedule:
    x: np.ndarray
    s: np.ndarray
    z: np.ndarray
    p_above: np.ndarray
    p_bar: np.ndarray
    f_cost: np.ndarray
    v_cost: np.ndarray
    total_cost: float

    @property
    def on(self) -> np.ndarray:
        return self.s + self.x

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in
                ("x", "s", "z", "p_above", "p_bar", "f_cost", "v_cost")} | {
            "total_cost": self.total_cost}

    @classmethod
    def from_dict(cls, d: dict) -> "UcSchedule":
        arrs = {k: np.array(d[k], dtype=int if k in BINARY_KINDS else float)
                for k in ("x", "s", "z", "p_above", "p_bar", "f_cost", "v_cost")}
        return cls(**arrs, total_cost=float(d["total_cost"]))


def schedule_cost(sched: UcSchedule, cu1: np.ndarray, cb1: np.ndarray) -> float:
    """Objective value: start-up, production, hot-start and no-load terms."""
    return float(sched.f_cost.sum() + sched.v_cost.sum()
                 + (cu1[:, None] * sched.s).sum()
                 + (cb1[:, None] * (sched.s + sched.x)).sum())


def decode_solution(x_vec, vmap: VariableMap, tol: float = 1e-6) -> UcSchedule:
    x_vec = np.asarray(x_vec, dtype=float).ravel()
    if x_vec.size != len(vmap):
        raise DecodeError(f"solution has {x_vec.size} entries, map has {len(vmap)}")
    shape = (vmap.n_gens, vmap.horizon)
    mats = {k: np.zeros(shape) for k in KINDS}
    for j, (kind, g, t) in enumerate(vmap.entries):
        mats[kind][g, t] = x_vec[j]
    for kind in BINARY_KINDS:
        m = mats[kind]
        r = np.round(m)
        if np.any(np.abs(m - r) > tol) or np.any((r != 0) & (r != 1)):
            raise DecodeError(f"fractional or non-binary value in {kind}")
        mats[kind] = r.astype(int)
    sched = UcSchedule(mats["x"], mats["s"], mats["z"], mats["p_above"], mats["p_bar"],
                       mats["f"], mats["v"], 0.0)
    total = schedule_cost(sched, vmap.cu1, vmap.cb1)
    return UcSchedule(sched.x, sched.s, sched.z, sched.p_above, sched.p_bar, sched.f_cost,
                      sched.v_cost, total)


def encode_schedule(sched: UcSchedule, vmap: VariableMap) -> np.ndarray:
    """Inverse of :func:`decode_solution` (ignores ``total_cost``)."""
    mats = {"x": sched.x, "s": sched.s, "z": sched.z, "p_above": sched.p_above,
            "p_bar": sched.p_bar, "f": sched.f_cost, "v": sched.v_cost}
    return np.array([float(mats[k][g, t]) for k, g, t in vmap.entries])


# -- validation --------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    family: str
    index: int        # generator, line or -1 for system-wide rows
    t: int
    amount: float


@dataclass
class ViolationReport:
    violations: list[Violation] = field(default_factory=list)

    def __bool__(self) -> bool:
        return bool(self.violations)

    def __len__(self) -> int:
        return len(self.violations)

    @property
    def ok(self) -> bool:
        return not self.violations

    def families(self) -> set[str]:
        return {v.family for v in self.violations}

    def by_family(self, family: str) -> list[Violation]:
        return [v for v in self.violations if v.family == family]


def validate_schedule(instance: UcInstance, sched: UcSchedule, tol: float = 1e-6) -> ViolationReport:
    """Check a schedule constraint by constraint against the UC model.

    An amount counts as a violation when it exceeds ``tol`` scaled by the
    magnitude of the quantities compared (at least 1), so dollar- and
    MW-valued rows share one tolerance.
    """
    gens = instance.generators
    G, T = len(gens), instance.horizon
    rep = ViolationReport()

    def check(family, idx, t, lhs, rhs, scale=1.0):
        amount = lhs - rhs
        if amount > tol * max(1.0, abs(scale), abs(rhs)):
            rep.violations.append(Violation(family, idx, t, float(amount)))

    def X(g, t):
        return float(sched.x[g, t]) if t >= 0 else virtual_x(gens[g], t)

    def S(g, t):
        return float(sched.s[g, t]) if 0 <= t < T else 0.0

    def Z(g, t):
        return float(sched.z[g, t]) if 0 <= t < T else 0.0

    def P(g, t):
        return float(sched.p_above[g, t]) if t >= 0 else initial_p_above(gens[g])

    for name, arr in (("x", sched.x), ("s", sched.s), ("z", sched.z)):
        bad = np.argwhere((arr != 0) & (arr != 1))
        for g, t in bad:
            rep.violations.append(Violation("binary", int(g), int(t), float(arr[g, t])))
    for name, arr in (("p_above", sched.p_above), ("f", sched.f_cost), ("v", sched.v_cost),
                      ("p_bar", sched.p_bar)):
        for g, t in np.argwhere(arr < -tol):
            rep.violations.append(Violation("bounds", int(g), int(t), float(-arr[g, t])))
    for g, gen in enumerate(gens):
        for t in range(T):
            check("bounds", g, t, sched.p_above[g, t], gen.p_max - gen.p_min)
            check("bounds", g, t, sched.p_bar[g, t], gen.p_max)

    demand = instance.scenario.d.sum(axis=0)
    gen_out = np.array([[P(g, t) + gens[g].p_min * (S(g, t) + X(g, t)) for t in range(T)]
                        for g in range(G)]).reshape(G, T)
    for t in range(T):
        check("load_balance", -1, t, demand[t], gen_out[:, t].sum())
        check("reserve", -1, t, demand[t] + instance.scenario.r[t], sched.p_bar[:, t].sum())

    for g, gen in enumerate(gens):
        vc = segment_slopes(gen)
        for t in range(T):
            on = S(g, t) + X(g, t)
            check("gen_lower", g, t, P(g, t) + gen.p_min * on, sched.p_bar[g, t], gen.p_max)
            check("gen_upper", g, t, sched.p_bar[g, t],
                  gen.p_max * on + (gen.sd - gen.p_max) * Z(g, t + 1), gen.p_max)
            check("min_up", g, t, sum(S(g, i) for i in range(t - gen.ut + 1, t)), X(g, t))
            check("min_down", g, t, sum(S(g, i) for i in range(t - gen.dt, t + 1)),
                  1.0 - X(g, t - gen.dt))
            check("ramp_up", g, t, sched.p_bar[g, t] - P(g, t - 1),
                  gen.su * S(g, t) + (gen.ru + gen.p_min) * X(g, t), gen.p_max)
            check("ramp_down", g, t, P(g, t - 1) - P(g, t),
                  (gen.sd - gen.p_min) * Z(g, t) + gen.rd * X(g, t), gen.p_max)
            lhs = S(g, t - 1) + X(g, t - 1)
            rhs = Z(g, t) + X(g, t)
            if abs(lhs - rhs) > tol:
                rep.violations.append(Violation("state_transition", g, t, float(abs(lhs - rhs))))
            check("on_exclusive", g, t, on, 1.0)
            for k in range(1, len(gen.cu)):
                nd = gen.nd[k]
                hist = S(g, t) - sum(S(g, t - i) for i in range(gen.dt, nd + 1)) - X(g, t - nd)
                check("startup_cost", g, t, (gen.cu[k] - gen.cu[0]) * hist,
                      sched.f_cost[g, t], gen.cu[k])
            for k in range(gen.nl):
                bound = vc[k] * (P(g, t) + gen.p_min - gen.pb[k]) + gen.cb[k] - gen.cb[0]
                check("production_cost", g, t, bound, sched.v_cost[g, t], gen.cb[-1])

    d = instance.scenario.d
    for m, line in enumerate(instance.system.lines):
        for t in range(T):
            flow = float(gen_out[:, t] @ instance.ptdf_gen[:, m] - d[:, t] @ instance.ptdf_bus[:, m])
            check("line_pos", m, t, flow, line.f_pos, line.f_pos)
            check("line_neg", m, t, line.f_neg, flow, line.f_neg)
    return rep
