"""Bounded-variable simplex for the LP relaxation of a :class:`MilpProblem`.

The problem ``min c^T x, A x <= b, l <= x <= u`` is solved in the
equality form ``[A I] (x, s) = b`` with slacks ``s >= 0``.  The basis is
held as a sparse LU factorization plus a file of eta (product form)
updates, refactorized every ``REFACTOR_EVERY`` pivots.

* cold start from the slack basis; if that basis is dual feasible the
  dual simplex runs directly, otherwise a composite primal phase 1
  (minimize the sum of infeasibilities) precedes primal phase 2;
* warm start from a previous basis and its pricing weights (bounds
  tightened by branching keep dual feasibility, so the dual simplex
  re-optimizes in a few pivots);
* the dual simplex prices leaving rows by dual steepest edge and uses a
  bound-flipping ratio test for boxed columns; the primal simplex uses
  Dantzig pricing with a Harris two-pass ratio test;
* after a run of degenerate pivots the solver switches to Bland's rule
  until progress resumes.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .problem import MilpError, MilpProblem

FEAS_TOL = 1e-7
OPT_TOL = 1e-7
PIVOT_TOL = 1e-9
REFACTOR_EVERY = 32
DEGENERATE_RUN = 60


class LpStatus(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


class BasisStatus(IntEnum):
    LOWER = 0
    BASIC = 1
    UPPER = 2
    ZERO = 3


class LpNumericalError(RuntimeError):
    pass


@dataclass
class WarmStart:
    head: np.ndarray              # basic variable per row (length m)
    status: np.ndarray            # BasisStatus per variable incl. slacks (length n+m)
    factor: "_Factor | None" = None
    weights: np.ndarray | None = None    # dual steepest-edge weights of this basis

    def without_factor(self) -> "WarmStart":
        return WarmStart(self.head, self.status, None, self.weights)


@dataclass
class LpSolution:
    status: LpStatus
    x: np.ndarray
    objective: float
    duals: np.ndarray
    reduced_costs: np.ndarray
    basis: np.ndarray             # BasisStatus per structural column
    row_basis: np.ndarray         # BasisStatus per row slack
    iterations: int = 0
    warm: WarmStart | None = None

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def solve_lp(problem: MilpProblem, overrides=None, warm_start: WarmStart | None = None,
             keep_factor: bool = True, max_iter: int | None = None) -> LpSolution:
    """Solve the LP relaxation of ``problem``.

    ``overrides`` is ``None``, a pair ``(l, u)`` of full bound vectors or a
    mapping ``{column: (lo, hi)}``; overrides must only tighten bounds.
    """
    l, u = _resolve_bounds(problem, overrides)
    if np.any(l > u + 1e-12):
        return _trivially_infeasible(problem)
    solver = _Simplex(problem, l, u, warm_start, max_iter)
    return solver.run(keep_factor)


def _resolve_bounds(problem: MilpProblem, overrides):
    if overrides is None:
        return problem.l, problem.u
    if isinstance(overrides, tuple) and len(overrides) == 2 and np.ndim(overrides[0]) == 1:
        l = np.asarray(overrides[0], dtype=float)
        u = np.asarray(overrides[1], dtype=float)
        if l.size != problem.n or u.size != problem.n:
            raise MilpError("override bound vectors have the wrong length")
    else:
        l = problem.l.copy()
        u = problem.u.copy()
        for j, (lo, hi) in dict(overrides).items():
            if not 0 <= j < problem.n:
                raise MilpError(f"override column {j} out of range")
            l[j], u[j] = lo, hi
    if np.any(l < problem.l - 1e-12) or np.any(u > problem.u + 1e-12):
        raise MilpError("bound overrides may only tighten bounds")
    return l, u


def _trivially_infeasible(problem: MilpProblem) -> LpSolution:
    n, m = problem.n, problem.m
    return LpSolution(LpStatus.INFEASIBLE, np.full(n, np.nan), np.inf, np.zeros(m),
                      np.zeros(n), np.full(n, BasisStatus.LOWER, dtype=np.int8),
                      np.full(m, BasisStatus.BASIC, dtype=np.int8))


def _matrices(problem: MilpProblem):
    """A^T (csr) and [A I] (csc), cached on the problem instance."""
    cache = problem.__dict__.get("_simplex_mats")
    if cache is None:
        A = problem.A
        aug = sp.hstack([A, sp.identity(problem.m, format="csr")], format="csc")
        aug.sort_indices()
        cache = (A.T.tocsr(), aug)
        object.__setattr__(problem, "_simplex_mats", cache)
    return cache


class _Factor:
    """Sparse LU of a starting basis followed by eta updates.

    Shared LU objects are never mutated, so copies only duplicate the eta list.
    """

    def __init__(self, m: int, lu, etas: list):
        self.m = m
        self.lu = lu          # None means the identity
        self.etas = etas      # (row, column) pairs, applied in order

    @classmethod
    def identity(cls, m: int) -> "_Factor":
        return cls(m, None, [])

    @classmethod
    def factorize(cls, B: sp.csc_matrix) -> "_Factor":
        m = B.shape[0]
        if m == 0:
            return cls(0, None, [])
        try:
            lu = spla.splu(B, permc_spec="COLAMD")
        except RuntimeError as exc:
            raise np.linalg.LinAlgError(str(exc)) from None
        return cls(m, lu, [])

    def copy(self) -> "_Factor":
        return _Factor(self.m, self.lu, list(self.etas))

    def update(self, r: int, w: np.ndarray) -> None:
        self.etas.append((r, w.copy()))

    def ftran(self, v: np.ndarray) -> np.ndarray:
        y = self.lu.solve(v) if self.lu is not None else np.array(v, dtype=float)
        for r, w in self.etas:
            yr = y[r] / w[r]
            if yr != 0.0:
                y -= yr * w
            y[r] = yr
        return y

    def btran(self, v: np.ndarray) -> np.ndarray:
        y = np.array(v, dtype=float)
        for r, w in reversed(self.etas):
            y[r] += (y[r] - y @ w) / w[r]
        return self.lu.solve(y, trans="T") if self.lu is not None else y


class _Simplex:
    def __init__(self, problem: MilpProblem, l, u, warm: WarmStart | None, max_iter):
        self.p = problem
        self.m, self.n = problem.m, problem.n
        m, n = self.m, self.n
        self.N = n + m
        self.A = problem.A
        self.At, self.Aug = _matrices(problem)
        self.b = np.asarray(problem.b, dtype=float)
        self.lo = np.concatenate([l, np.zeros(m)])
        self.hi = np.concatenate([u, np.full(m, np.inf)])
        self.cost = np.concatenate([problem.c, np.zeros(m)])
        self.fixed = self.lo == self.hi
        self.iters = 0
        self.max_iter = max_iter or 50 * (self.N + 10)
        self.since_refactor = 0
        self.bland = False
        self.degenerate = 0
        self.x = np.zeros(self.N)
        self.dse: np.ndarray | None = None
        if warm is not None and not self._load_warm(warm):
            warm = None
        if warm is None:
            self._cold_start()

    # -- setup ----------------------------------------------------------

    def _place_nonbasic(self, j: int) -> None:
        lo, hi = self.lo[j], self.hi[j]
        if np.isfinite(lo) and np.isfinite(hi):
            st = BasisStatus.LOWER if self.cost[j] >= 0 else BasisStatus.UPPER
        elif np.isfinite(lo):
            st = BasisStatus.LOWER
        elif np.isfinite(hi):
            st = BasisStatus.UPPER
        else:
            st = BasisStatus.ZERO
        self.status[j] = st
        self.x[j] = lo if st == BasisStatus.LOWER else hi if st == BasisStatus.UPPER else 0.0

    def _cold_start(self) -> None:
        n, m = self.n, self.m
        self.status = np.empty(self.N, dtype=np.int8)
        for j in range(n):
            self._place_nonbasic(j)
        self.head = np.arange(n, n + m)
        self.status[n:] = BasisStatus.BASIC
        self.factor = _Factor.identity(m)
        self.dse = np.ones(m)
        self._compute_basics()

    def _load_warm(self, warm: WarmStart) -> bool:
        head = np.asarray(warm.head)
        if head.size != self.m or warm.status.size != self.N:
            return False
        self.head = head.copy()
        self.status = warm.status.copy()
        st, lo, hi = self.status, self.lo, self.hi
        at_lo = (st == BasisStatus.LOWER) & np.isfinite(lo)
        at_hi = (st == BasisStatus.UPPER) & np.isfinite(hi)
        free = (st == BasisStatus.ZERO) & ~np.isfinite(lo) & ~np.isfinite(hi)
        self.x[at_lo] = lo[at_lo]
        self.x[at_hi] = hi[at_hi]
        self.x[free] = 0.0
        for j in np.flatnonzero((st != BasisStatus.BASIC) & ~at_lo & ~at_hi & ~free):
            self._place_nonbasic(j)
        if warm.weights is not None and warm.weights.size == self.m:
            self.dse = warm.weights.copy()
        if warm.factor is not None and warm.factor.m == self.m:
            self.factor = warm.factor.copy()
            self._compute_basics()
        else:
            try:
                self._refactor()
            except np.linalg.LinAlgError:
                return False
        return True

    # -- linear algebra -------------------------------------------------

    def _column(self, j: int):
        a, b = self.Aug.indptr[j], self.Aug.indptr[j + 1]
        return self.Aug.indices[a:b], self.Aug.data[a:b]

    def _ftran(self, j: int) -> np.ndarray:
        idx, vals = self._column(j)
        v = np.zeros(self.m)
        v[idx] = vals
        return self.factor.ftran(v)

    def _basis_matrix(self) -> sp.csc_matrix:
        return self.Aug[:, self.head]

    def _refactor(self) -> None:
        self.factor = _Factor.factorize(self._basis_matrix())
        self.since_refactor = 0
        self._compute_basics()

    def _compute_basics(self) -> None:
        n = self.n
        xn = self.x.copy()
        xn[self.head] = 0.0
        rhs = self.b - self.A @ xn[:n] - xn[n:]
        self.x[self.head] = self.factor.ftran(rhs)

    def _pivot(self, r: int, w: np.ndarray) -> None:
        self.factor.update(r, w)
        self.since_refactor += 1
        if len(self.factor.etas) >= REFACTOR_EVERY:
            self._refactor()

    def _duals(self, cost: np.ndarray) -> np.ndarray:
        return self.factor.btran(cost[self.head])

    def _reduced_costs(self, cost: np.ndarray, y: np.ndarray) -> np.ndarray:
        d = cost.copy()
        d[: self.n] -= self.At @ y
        d[self.n:] -= y
        d[self.head] = 0.0
        return d

    def _row_alpha(self, r: int) -> tuple[np.ndarray, np.ndarray]:
        """Row ``r`` of B^-1 [A I] and row ``r`` of B^-1."""
        e = np.zeros(self.m)
        e[r] = 1.0
        rho = self.factor.btran(e)
        return np.concatenate([self.At @ rho, rho]), rho

    def _exact_weights(self) -> np.ndarray:
        """Squared norms of the rows of B^-1, from a fresh factorization."""
        if self.m == 0:
            return np.zeros(0)
        lu = spla.splu(self._basis_matrix().tocsc(), permc_spec="COLAMD")
        rows = lu.solve(np.eye(self.m), trans="T")
        return np.maximum(np.einsum("ij,ij->j", rows, rows), 1e-12)

    # -- feasibility measures -------------------------------------------

    def _basic_infeasibility(self):
        xb = self.x[self.head]
        lo = self.lo[self.head]
        hi = self.hi[self.head]
        below = lo - xb
        above = xb - hi
        return below, above

    def _primal_feasible(self) -> bool:
        below, above = self._basic_infeasibility()
        return not (np.any(below > FEAS_TOL) or np.any(above > FEAS_TOL))

    def _dual_infeasibility(self, d: np.ndarray) -> np.ndarray:
        viol = np.zeros(self.N)
        st = self.status
        lower = (st == BasisStatus.LOWER) & ~self.fixed
        upper = (st == BasisStatus.UPPER) & ~self.fixed
        zero = st == BasisStatus.ZERO
        viol[lower] = np.maximum(-d[lower], 0.0)
        viol[upper] = np.maximum(d[upper], 0.0)
        viol[zero] = np.abs(d[zero])
        return viol

    # -- main driver ----------------------------------------------------

    def run(self, keep_factor: bool) -> LpSolution:
        clean_checks = 0
        for _ in range(8):
            if self._primal_feasible():
                status = self._primal(phase=2)
            else:
                d = self._reduced_costs(self.cost, self._duals(self.cost))
                if np.all(self._dual_infeasibility(d) <= OPT_TOL):
                    status = self._dual()
                else:
                    status = self._primal(phase=1)
                    if status is LpStatus.OPTIMAL:
                        status = self._primal(phase=2)
            if status is not LpStatus.OPTIMAL:
                return self._result(status, keep_factor)
            if clean_checks:
                self._refactor()
            else:
                self._compute_basics()
            clean_checks += 1
            d = self._reduced_costs(self.cost, self._duals(self.cost))
            if self._primal_feasible() and np.all(self._dual_infeasibility(d) <= OPT_TOL):
                return self._result(LpStatus.OPTIMAL, keep_factor)
        raise LpNumericalError("simplex failed to reach a clean optimal basis")

    def _tick(self) -> None:
        self.iters += 1
        if self.iters > self.max_iter:
            raise LpNumericalError(f"simplex iteration limit {self.max_iter} exceeded")

    def _note_step(self, degenerate: bool) -> None:
        if degenerate:
            self.degenerate += 1
            if self.degenerate >= DEGENERATE_RUN:
                self.bland = True
        else:
            self.degenerate = 0
            self.bland = False

    # -- primal simplex -------------------------------------------------

    def _phase1_cost(self) -> np.ndarray:
        cost = np.zeros(self.N)
        below, above = self._basic_infeasibility()
        cost[self.head[below > FEAS_TOL]] = -1.0
        cost[self.head[above > FEAS_TOL]] = 1.0
        return cost

    def _primal(self, phase: int) -> LpStatus:
        while True:
            if phase == 1:
                cost = self._phase1_cost()
                if not np.any(cost):
                    return LpStatus.OPTIMAL
            else:
                cost = self.cost
            d = self._reduced_costs(cost, self._duals(cost))
            q, direction = self._price(d)
            if q < 0:
                if phase == 1:
                    return LpStatus.INFEASIBLE
                return LpStatus.OPTIMAL
            self._tick()
            w = self._ftran(q)
            t, r, leave_to = self._primal_ratio(q, direction, w, phase)
            if not np.isfinite(t):
                if phase == 1:
                    raise LpNumericalError("unbounded ray in phase 1")
                return LpStatus.UNBOUNDED
            self._note_step(t <= 1e-12)
            self.x[q] += direction * t
            self.x[self.head] -= direction * t * w
            if r < 0:
                self.status[q] = BasisStatus.UPPER if direction > 0 else BasisStatus.LOWER
                self.x[q] = self.hi[q] if direction > 0 else self.lo[q]
                continue
            leaving = self.head[r]
            self.x[leaving] = leave_to
            self.status[leaving] = (BasisStatus.LOWER if leave_to == self.lo[leaving]
                                    else BasisStatus.UPPER)
            self.head[r] = q
            self.status[q] = BasisStatus.BASIC
            self.dse = None
            self._pivot(r, w)

    def _price(self, d: np.ndarray):
        st = self.status
        movable = ~self.fixed
        up = (st == BasisStatus.LOWER) & movable & (d < -OPT_TOL)
        down = (st == BasisStatus.UPPER) & movable & (d > OPT_TOL)
        free = (st == BasisStatus.ZERO) & (np.abs(d) > OPT_TOL)
        score = np.zeros(self.N)
        cand = up | down | free
        if not np.any(cand):
            return -1, 0
        score[cand] = np.abs(d[cand])
        q = int(np.flatnonzero(cand)[0]) if self.bland else int(np.argmax(score))
        if up[q]:
            direction = 1
        elif down[q]:
            direction = -1
        else:
            direction = 1 if d[q] < 0 else -1
        return q, direction

    def _primal_ratio(self, q: int, direction: int, w: np.ndarray, phase: int):
        """Return (step, leaving row or -1 for a bound flip, leaving value)."""
        head = self.head
        xb = self.x[head]
        lo = self.lo[head].copy()
        hi = self.hi[head].copy()
        if phase == 1:
            below = xb < lo - FEAS_TOL
            above = xb > hi + FEAS_TOL
            # an infeasible basic may move until it reaches the bound it violates
            hi = np.where(below, lo, hi)
            lo = np.where(below, -np.inf, lo)
            lo = np.where(above, hi, lo)
            hi = np.where(above, np.inf, hi)
        rate = -direction * w
        dec = rate < -PIVOT_TOL
        inc = rate > PIVOT_TOL
        target = np.full(self.m, np.nan)
        target[dec] = lo[dec]
        target[inc] = hi[inc]
        active = (dec | inc) & np.isfinite(target)
        flip = self.hi[q] - self.lo[q]
        if not np.any(active):
            if np.isfinite(flip):
                return flip, -1, 0.0
            return np.inf, -1, 0.0
        idx = np.flatnonzero(active)
        gap = np.abs(xb[idx] - target[idx])
        mag = np.abs(rate[idx])
        if self.bland:
            ratios = np.maximum(gap, 0.0) / mag
            ratios[(xb[idx] - target[idx]) * np.sign(rate[idx]) > 0] = 0.0
            tmin = ratios.min()
            if np.isfinite(flip) and flip <= tmin:
                return flip, -1, 0.0
            ties = idx[ratios <= tmin + 1e-12]
            r = int(ties[np.argmin(head[ties])])
            return max(tmin, 0.0), r, target[r]
        # Harris pass 1: relaxed bounds
        signed = np.where(rate[idx] < 0, xb[idx] - target[idx], target[idx] - xb[idx])
        relaxed = (signed + FEAS_TOL) / mag
        tmax = relaxed.min()
        if np.isfinite(flip) and flip <= tmax:
            return flip, -1, 0.0
        ok = relaxed <= tmax
        exact = np.maximum(signed, 0.0) / mag
        choose = np.flatnonzero(ok)
        k = choose[np.argmax(mag[choose])]
        r = int(idx[k])
        return exact[k], r, target[r]

    # -- dual simplex ---------------------------------------------------

    def _dual(self) -> LpStatus:
        d = None
        fresh_every = 32
        since = 0
        if self.dse is None:
            self.dse = self._exact_weights()
        while True:
            below, above = self._basic_infeasibility()
            infeas = np.maximum(below, above)
            if not np.any(infeas > FEAS_TOL):
                return LpStatus.OPTIMAL
            cand = np.flatnonzero(infeas > FEAS_TOL)
            if self.bland:
                r = int(cand[np.argmin(self.head[cand])])
            else:
                r = int(cand[np.argmax(infeas[cand] ** 2 / self.dse[cand])])
            self._tick()
            leaving = self.head[r]
            to_lower = below[r] > FEAS_TOL
            bound = self.lo[leaving] if to_lower else self.hi[leaving]
            delta = self.x[leaving] - bound
            if d is None or since >= fresh_every:
                d = self._reduced_costs(self.cost, self._duals(self.cost))
                since = 0
            alpha, rho = self._row_alpha(r)
            if self.bland:
                q, flips = self._dual_ratio(alpha, d, delta), ()
            else:
                q, flips = self._dual_ratio_long(alpha, d, delta)
            if q < 0:
                return LpStatus.INFEASIBLE
            if len(flips):
                self._flip(flips)
                delta = self.x[leaving] - bound
            w = self._ftran(q)
            if abs(w[r]) < PIVOT_TOL:
                self._refactor()
                d = None
                continue
            self._update_weights(r, w, rho)
            t = delta / w[r]
            theta = d[q] / alpha[q]
            dual_step = abs(theta)
            self._note_step(dual_step <= 1e-12)
            self.x[q] += t
            self.x[self.head] -= t * w
            self.x[leaving] = bound
            self.status[leaving] = BasisStatus.LOWER if to_lower else BasisStatus.UPPER
            self.head[r] = q
            self.status[q] = BasisStatus.BASIC
            d -= theta * alpha
            d[self.head] = 0.0
            since += 1
            self._pivot(r, w)

    def _update_weights(self, r: int, w: np.ndarray, rho: np.ndarray) -> None:
        tau = self.factor.ftran(rho)
        wr = w[r]
        ratio = w / wr
        beta_r = self.dse[r]
        new = self.dse - 2.0 * ratio * tau + ratio * ratio * beta_r
        new[r] = beta_r / (wr * wr)
        self.dse = np.maximum(new, 1e-12)

    def _dual_ratio(self, alpha: np.ndarray, d: np.ndarray, delta: float) -> int:
        st = self.status
        movable = ~self.fixed
        lower = (st == BasisStatus.LOWER) & movable
        upper = (st == BasisStatus.UPPER) & movable
        zero = st == BasisStatus.ZERO
        sgn = -1.0 if delta < 0 else 1.0
        # x_leaving must move by -delta; entering x_j changes x_leaving at rate -alpha_j
        elig = (lower & (sgn * alpha > PIVOT_TOL)) | (upper & (sgn * alpha < -PIVOT_TOL))
        elig |= zero & (np.abs(alpha) > PIVOT_TOL)
        if not np.any(elig):
            return -1
        idx = np.flatnonzero(elig)
        dj = np.abs(d[idx])
        dj[lower[idx]] = np.maximum(d[idx][lower[idx]], 0.0)
        dj[upper[idx]] = np.maximum(-d[idx][upper[idx]], 0.0)
        mag = np.abs(alpha[idx])
        if self.bland:
            ratios = dj / mag
            tmin = ratios.min()
            ties = idx[ratios <= tmin + 1e-12]
            return int(ties.min())
        relaxed = (dj + OPT_TOL) / mag
        tmax = relaxed.min()
        ok = np.flatnonzero(relaxed <= tmax)
        return int(idx[ok[np.argmax(mag[ok])]])

    def _dual_ratio_long(self, alpha: np.ndarray, d: np.ndarray, delta: float):
        """Bound-flipping ratio test.

        Boxed candidates whose breakpoints come first are flipped to their
        other bound as long as the leaving row stays infeasible; returns the
        entering column and the columns to flip.
        """
        st = self.status
        movable = ~self.fixed
        lower = (st == BasisStatus.LOWER) & movable
        upper = (st == BasisStatus.UPPER) & movable
        zero = st == BasisStatus.ZERO
        sgn = -1.0 if delta < 0 else 1.0
        elig = (lower & (sgn * alpha > PIVOT_TOL)) | (upper & (sgn * alpha < -PIVOT_TOL))
        elig |= zero & (np.abs(alpha) > PIVOT_TOL)
        if not np.any(elig):
            return -1, ()
        idx = np.flatnonzero(elig)
        dj = np.abs(d[idx])
        dj[lower[idx]] = np.maximum(d[idx][lower[idx]], 0.0)
        dj[upper[idx]] = np.maximum(-d[idx][upper[idx]], 0.0)
        mag = np.abs(alpha[idx])
        ratio = dj / mag
        order = np.argsort(ratio, kind="stable")
        drop = mag[order] * (self.hi - self.lo)[idx[order]]
        # flip while the leaving row stays infeasible; stop at the first unbounded candidate
        remaining = abs(delta) - np.cumsum(drop)
        blocked = ~np.isfinite(drop) | (remaining <= FEAS_TOL)
        if not np.any(blocked):
            return -1, ()
        k = int(np.argmax(blocked))
        # among near-ties with the blocking breakpoint prefer the largest pivot
        t_k = ratio[order[k]]
        ties = order[k:][ratio[order[k:]] <= t_k + OPT_TOL / np.maximum(mag[order[k:]], 1.0)]
        q_local = ties[np.argmax(mag[ties])]
        flips = idx[order[:k]]
        return int(idx[q_local]), flips

    def _flip(self, cols: np.ndarray) -> None:
        """Move nonbasic boxed columns to their opposite bound and update the basics."""
        to_upper = self.status[cols] == BasisStatus.LOWER
        step = np.where(to_upper, self.hi[cols] - self.lo[cols], self.lo[cols] - self.hi[cols])
        self.x[cols] = np.where(to_upper, self.hi[cols], self.lo[cols])
        self.status[cols] = np.where(to_upper, BasisStatus.UPPER, BasisStatus.LOWER)
        v = np.asarray(self.Aug[:, cols] @ step).ravel()
        self.x[self.head] -= self.factor.ftran(v)

    # -- output ---------------------------------------------------------

    def _result(self, status: LpStatus, keep_factor: bool) -> LpSolution:
        n = self.n
        y = self._duals(self.cost)
        d = self._reduced_costs(self.cost, y)
        x = self.x[:n].copy()
        if status is LpStatus.OPTIMAL:
            x = np.clip(x, self.lo[:n], self.hi[:n])
            objective = float(self.p.c @ x)
        elif status is LpStatus.INFEASIBLE:
            objective = np.inf
        else:
            objective = -np.inf
        warm = WarmStart(self.head.copy(), self.status.copy(),
                         self.factor if keep_factor else None,
                         None if self.dse is None else self.dse.copy())
        return LpSolution(
            status=status,
            x=x,
            objective=objective,
            duals=y,
            reduced_costs=d[:n].copy(),
            basis=self.status[:n].copy(),
            row_basis=self.status[n:].copy(),
            iterations=self.iters,
            warm=warm,
        )


@dataclass(frozen=True)
class Certificate:
    primal_violation: float
    dual_violation: float
    primal_objective: float
    dual_objective: float

    @property
    def duality_gap(self) -> float:
        return abs(self.primal_objective - self.dual_objective) / max(1.0, abs(self.primal_objective))

    def holds(self, tol: float = 1e-6) -> bool:
        return (self.primal_violation <= tol and self.dual_violation <= tol
                and self.duality_gap <= tol)


def lp_certificate(problem: MilpProblem, sol: LpSolution, overrides=None) -> Certificate:
    """Primal/dual residuals and objectives of an optimal LP solution.

    Row duals y <= 0 price the <= rows; the dual objective is
    ``b^T y + sum_j (l_j max(d_j, 0) + u_j min(d_j, 0))`` with
    ``d = c - A^T y``.  An infinite bound paired with a nonzero reduced
    cost in that direction counts as dual infeasibility.
    """
    l, u = _resolve_bounds(problem, overrides)
    x, y = sol.x, sol.duals
    pv = 0.0
    if problem.m:
        pv = max(pv, float(np.max(problem.A @ x - problem.b, initial=0.0)))
    pv = max(pv, float(np.max(l - x, initial=0.0)), float(np.max(x - u, initial=0.0)))
    d = problem.c - problem.A.T @ y
    dv = float(np.max(y, initial=0.0))
    pos = np.maximum(d, 0.0)
    neg = np.minimum(d, 0.0)
    dv = max(dv, float(np.max(np.where(np.isinf(l), pos, 0.0), initial=0.0)))
    dv = max(dv, float(np.max(np.where(np.isinf(u), -neg, 0.0), initial=0.0)))
    lo_term = np.where(np.isinf(l), 0.0, np.where(np.isinf(l), 0.0, l) * pos)
    hi_term = np.where(np.isinf(u), 0.0, np.where(np.isinf(u), 0.0, u) * neg)
    dual_obj = float(problem.b @ y + lo_term.sum() + hi_term.sum())
    return Certificate(pv, dv, float(problem.c @ x), dual_obj)
