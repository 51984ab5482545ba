"""General-form MILP container: min c^T x s.t. A x <= b, l <= x <= u."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp


class MilpError(ValueError):
    """Raised when a problem or an operation on it is malformed."""


@dataclass(frozen=True, eq=False)
class MilpProblem:
    """Rows are all stored in <= sense. Bounds may be infinite."""

    c: np.ndarray
    A: sp.csr_matrix
    b: np.ndarray
    l: np.ndarray
    u: np.ndarray
    is_integer: np.ndarray
    row_names: tuple[str, ...] | None = None
    col_names: tuple[str, ...] | None = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        A = sp.csr_matrix(self.A, dtype=float)
        A.eliminate_zeros()
        A.sort_indices()
        b = np.asarray(self.b, dtype=float).ravel()
        l = np.asarray(self.l, dtype=float).ravel()
        u = np.asarray(self.u, dtype=float).ravel()
        ints = np.asarray(self.is_integer, dtype=bool).ravel()
        m, n = A.shape
        if c.size != n or l.size != n or u.size != n or ints.size != n:
            raise MilpError(f"column dimension mismatch (A has {n} columns)")
        if b.size != m:
            raise MilpError(f"row dimension mismatch (A has {m} rows, b has {b.size})")
        if np.any(np.isnan(c)) or np.any(np.isnan(b)) or np.any(np.isinf(c)):
            raise MilpError("c and b must be finite")
        if np.any(l > u):
            raise MilpError("lower bound exceeds upper bound")
        if m and np.any(np.diff(A.indptr) == 0):
            raise MilpError("A has an all-zero row")
        for name, arr in (("c", c), ("b", b), ("l", l), ("u", u), ("is_integer", ints)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "A", A)

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def integer_columns(self) -> np.ndarray:
        return np.flatnonzero(self.is_integer)

    @property
    def binary_columns(self) -> np.ndarray:
        mask = self.is_integer & (self.l >= 0) & (self.u <= 1)
        return np.flatnonzero(mask)

    def with_bounds(self, l: np.ndarray, u: np.ndarray) -> "MilpProblem":
        return MilpProblem(self.c, self.A, self.b, l, u, self.is_integer,
                           self.row_names, self.col_names)

    def objective(self, x: np.ndarray) -> float:
        return float(self.c @ np.asarray(x, dtype=float))

    def equals(self, other: "MilpProblem") -> bool:
        """Exact structural equality, including sparsity pattern."""
        return (
            self.A.shape == other.A.shape
            and np.array_equal(self.c, other.c)
            and np.array_equal(self.b, other.b)
            and np.array_equal(self.l, other.l)
            and np.array_equal(self.u, other.u)
            and np.array_equal(self.is_integer, other.is_integer)
            and np.array_equal(self.A.indptr, other.A.indptr)
            and np.array_equal(self.A.indices, other.A.indices)
            and np.array_equal(self.A.data, other.A.data)
        )

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        coo = self.A.tocoo()
        return {
            "format": "milp-triplet",
            "version": 1,
            "n": self.n,
            "m": self.m,
            "c": _floats(self.c),
            "b": _floats(self.b),
            "l": _floats(self.l),
            "u": _floats(self.u),
            "is_integer": [bool(v) for v in self.is_integer],
            "rows": coo.row.tolist(),
            "cols": coo.col.tolist(),
            "vals": _floats(coo.data),
            "row_names": list(self.row_names) if self.row_names else None,
            "col_names": list(self.col_names) if self.col_names else None,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "MilpProblem":
        if d.get("format") != "milp-triplet":
            raise MilpError("not a milp-triplet document")
        A = sp.coo_matrix(
            (_unfloats(d["vals"]), (d["rows"], d["cols"])), shape=(d["m"], d["n"])
        ).tocsr()
        return cls(
            c=_unfloats(d["c"]),
            A=A,
            b=_unfloats(d["b"]),
            l=_unfloats(d["l"]),
            u=_unfloats(d["u"]),
            is_integer=np.array(d["is_integer"], dtype=bool),
            row_names=tuple(d["row_names"]) if d.get("row_names") else None,
            col_names=tuple(d["col_names"]) if d.get("col_names") else None,
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "MilpProblem":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _floats(arr: Iterable[float]) -> list:
    # JSON has no infinity literal; encode as strings.
    out = []
    for v in arr:
        v = float(v)
        if np.isinf(v):
            out.append("inf" if v > 0 else "-inf")
        else:
            out.append(v)
    return out


def _unfloats(arr: Sequence) -> np.ndarray:
    return np.array([float(v) for v in arr], dtype=float)


def make_problem(c, A, b, l=None, u=None, is_integer=None) -> MilpProblem:
    """Convenience constructor with defaults l=0, u=inf, all continuous."""
    c = np.asarray(c, dtype=float)
    n = c.size
    if sp.issparse(A):
        A = sp.csr_matrix(A, dtype=float)
    elif np.size(A) == 0:
        A = sp.csr_matrix((0, n))
    else:
        A = sp.csr_matrix(np.atleast_2d(np.asarray(A, dtype=float)))
    l = np.zeros(n) if l is None else np.asarray(l, dtype=float)
    u = np.full(n, np.inf) if u is None else np.asarray(u, dtype=float)
    ints = np.zeros(n, dtype=bool) if is_integer is None else np.asarray(is_integer, dtype=bool)
    return MilpProblem(c, A, np.asarray(b, dtype=float), l, u, ints)


@dataclass(frozen=True)
class Assignment:
    """Fixings (column, value) for a sub-MIP."""

    pairs: tuple[tuple[int, int], ...] = field(default_factory=tuple)

    def __post_init__(self):
        pairs = tuple((int(j), int(v)) for j, v in self.pairs)
        cols = [j for j, _ in pairs]
        if len(set(cols)) != len(cols):
            raise MilpError("assignment indices must be distinct")
        if any(v not in (0, 1) for _, v in pairs):
            raise MilpError("assignment values must be 0 or 1")
        object.__setattr__(self, "pairs", pairs)

    def __len__(self) -> int:
        return len(self.pairs)


def fix_variables(problem: MilpProblem, a: Assignment) -> MilpProblem:
    """Return a copy with l_d = u_d = value for every fixed column.

    A value outside the original bounds does not raise: the result carries
    an extra row restoring the violated bound, so it is simply infeasible.
    """
    if not len(a):
        return problem
    l = problem.l.copy()
    u = problem.u.copy()
    crossed = []
    for j, v in a.pairs:
        if not 0 <= j < problem.n:
            raise MilpError(f"column {j} out of range")
        if not problem.is_integer[j]:
            raise MilpError(f"column {j} is not integer")
        if v < problem.l[j] or v > problem.u[j]:
            crossed.append(j)
        l[j] = u[j] = v
    if crossed:
        return _with_bound_rows(problem, l, u, crossed)
    return problem.with_bounds(l, u)


def _with_bound_rows(problem: MilpProblem, l, u, crossed) -> MilpProblem:
    # l == u == value sits outside the original box; an extra row restores the
    # violated original bound so the result stays well-formed but infeasible.
    rows, rhs = [], []
    for j in crossed:
        row = np.zeros(problem.n)
        if l[j] > problem.u[j]:
            row[j] = 1.0
            rhs.append(problem.u[j])
        else:
            row[j] = -1.0
            rhs.append(-problem.l[j])
        rows.append(row)
    A = sp.vstack([problem.A, sp.csr_matrix(np.array(rows))]).tocsr()
    b = np.concatenate([problem.b, rhs])
    return MilpProblem(problem.c, A, b, l, u, problem.is_integer, None, problem.col_names)


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    worst_violation: float
    kind: str | None = None
    index: int | None = None


def check_feasible(problem: MilpProblem, x, tol: float = 1e-6) -> FeasibilityReport:
    """Check rows, bounds and integrality of a candidate point."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size != problem.n:
        raise MilpError("dimension mismatch")
    worst, kind, idx = 0.0, None, None
    if problem.m:
        row_viol = problem.A @ x - problem.b
        i = int(np.argmax(row_viol))
        if row_viol[i] > worst:
            worst, kind, idx = float(row_viol[i]), "row", i
    lo_viol = problem.l - x
    lo_viol[np.isinf(problem.l)] = -np.inf
    up_viol = x - problem.u
    up_viol[np.isinf(problem.u)] = -np.inf
    for name, viol in (("lower", lo_viol), ("upper", up_viol)):
        if viol.size:
            j = int(np.argmax(viol))
            if viol[j] > worst:
                worst, kind, idx = float(viol[j]), name, j
    ints = problem.integer_columns
    if ints.size:
        frac = np.abs(x[ints] - np.round(x[ints]))
        k = int(np.argmax(frac))
        if frac[k] > worst:
            worst, kind, idx = float(frac[k]), "integrality", int(ints[k])
    return FeasibilityReport(worst <= tol, worst, kind if worst > tol else None,
                             idx if worst > tol else None)
