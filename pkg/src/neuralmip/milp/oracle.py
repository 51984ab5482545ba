"""Exhaustive-enumeration MILP oracle for tiny binary problems.

Continuous subproblems go through scipy's HiGHS interface rather than the
in-package simplex so the oracle stays independent of the code it checks.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .problem import MilpError, MilpProblem


class OracleScaleError(MilpError):
    pass


@dataclass(frozen=True)
class OracleResult:
    feasible: bool
    objective: float
    x: np.ndarray | None

    @property
    def infeasible(self) -> bool:
        return not self.feasible


def reference_lp(problem: MilpProblem, l=None, u=None):
    """Solve the continuous relaxation with HiGHS; returns (status, objective, x).

    status is one of "Optimal", "Infeasible", "Unbounded".
    """
    l = problem.l if l is None else l
    u = problem.u if u is None else u
    if np.any(l > u):
        return "Infeasible", np.inf, None
    bounds = [(None if np.isinf(lo) else lo, None if np.isinf(hi) else hi) for lo, hi in zip(l, u)]
    kwargs = {}
    if problem.m:
        kwargs = {"A_ub": problem.A, "b_ub": problem.b}
    res = linprog(problem.c, bounds=bounds, method="highs", **kwargs)
    if res.status == 0:
        return "Optimal", float(res.fun), np.asarray(res.x)
    if res.status == 2:
        return "Infeasible", np.inf, None
    if res.status == 3:
        return "Unbounded", -np.inf, None
    raise RuntimeError(f"HiGHS failed: {res.message}")


def brute_force_milp(problem: MilpProblem, max_binaries: int = 16) -> OracleResult:
    """Enumerate every 0/1 assignment of the integer columns and keep the best LP.

    Assignments are screened exactly before any LP is solved: a row whose
    smallest achievable activity over the continuous box exceeds its
    right-hand side, or an objective bound no better than the best found,
    rules the assignment out.
    """
    ints = problem.integer_columns
    if ints.size > max_binaries:
        raise OracleScaleError(f"{ints.size} integer columns exceeds oracle limit {max_binaries}")
    if np.any(problem.l[ints] < 0) or np.any(problem.u[ints] > 1):
        raise MilpError("oracle requires integer columns bounded within [0, 1]")
    cont = np.setdiff1d(np.arange(problem.n), ints)
    lo_ints = np.ceil(problem.l[ints] - 1e-9)
    hi_ints = np.floor(problem.u[ints] + 1e-9)
    grid = np.array(list(itertools.product((0.0, 1.0), repeat=ints.size))).reshape(
        2 ** ints.size, ints.size)
    keep = np.all((grid >= lo_ints) & (grid <= hi_ints), axis=1)
    grid = grid[keep]

    A = problem.A.toarray()
    Ai, Ac = A[:, ints], A[:, cont]
    lc, uc = problem.l[cont], problem.u[cont]
    # least activity of each row over the continuous box (inf when unbounded below)
    with np.errstate(invalid="ignore"):
        row_min = np.where(Ac > 0, Ac * lc, np.where(Ac < 0, Ac * uc, 0.0))
    row_min = np.nan_to_num(row_min, nan=0.0, neginf=-np.inf).sum(axis=1) if cont.size else np.zeros(problem.m)
    cc = problem.c[cont]
    with np.errstate(invalid="ignore"):
        obj_min = np.where(cc > 0, cc * lc, np.where(cc < 0, cc * uc, 0.0))
    obj_min = float(np.nan_to_num(obj_min, nan=0.0, neginf=-np.inf).sum()) if cont.size else 0.0

    act = grid @ Ai.T + row_min                     # rows x assignments
    slack_ok = np.all(act <= problem.b + 1e-9, axis=1) if problem.m else np.ones(len(grid), bool)
    grid = grid[slack_ok]
    bound = grid @ problem.c[ints] + obj_min
    order = np.argsort(bound, kind="stable")

    best_obj, best_x = np.inf, None
    for k in order:
        if bound[k] >= best_obj - 1e-12:
            break
        v = grid[k]
        l = problem.l.copy()
        u = problem.u.copy()
        l[ints] = v
        u[ints] = v
        if cont.size == 0:
            x = l
            if problem.m and np.any(problem.A @ x > problem.b + 1e-9):
                continue
            obj = float(problem.c @ x)
        else:
            status, obj, x = reference_lp(problem, l, u)
            if status == "Unbounded":
                raise MilpError("continuous subproblem unbounded; oracle needs a bounded MILP")
            if status != "Optimal":
                continue
        if obj < best_obj - 1e-12:
            best_obj, best_x = obj, x
    if best_x is None:
        return OracleResult(False, np.inf, None)
    return OracleResult(True, best_obj, best_x)
