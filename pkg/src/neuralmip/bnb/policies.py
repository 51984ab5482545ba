"""Variable-selection rules for branch-and-bound."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..milp.simplex import LpSolution, LpStatus
from .solver import NodeContext

TIE_RTOL = 1e-9


def sb_score(ctx: NodeContext, i: int) -> float:
    """Product of the two child LP degradations, each floored at epsilon.

    An infeasible child contributes ``infeasible_child_value`` instead.
    """
    return sb_score_from_values(ctx.value, ctx.child_value(i, "down"), ctx.child_value(i, "up"),
                                ctx.config.epsilon_sb, ctx.config.infeasible_child_value)


def sb_score_from_values(z: float, z_down: float, z_up: float, eps: float = 1e-6,
                         infeasible_value: float = 1e12) -> float:
    def factor(zc: float) -> float:
        if not math.isfinite(zc):
            return infeasible_value
        return max(zc - z, eps)

    return factor(z_down) * factor(z_up)


def argmax_lowest(columns, scores) -> int:
    """Column with the largest score; ties go to the lowest column index.

    Scores within a relative ``TIE_RTOL`` of the maximum count as ties, so
    child LPs reached by different warm starts pick the same column.
    """
    cols = [int(c) for c in columns]
    vals = [float(s) for s in scores]
    best = max(vals)
    cut = best - TIE_RTOL * max(1.0, abs(best)) if math.isfinite(best) else best
    return min(c for c, s in zip(cols, vals) if s >= cut)


def strong_branching_select(ctx: NodeContext) -> int:
    cands = ctx.candidates
    return argmax_lowest(cands, [sb_score(ctx, i) for i in cands])


def most_fractional_select(ctx: NodeContext) -> int:
    scores = [min(ctx.fractional_parts(i)) for i in ctx.candidates]
    return argmax_lowest(ctx.candidates, scores)


@dataclass
class PseudocostState:
    """Running per-unit objective gains per column and direction."""

    eta: int = 4
    sum_down: dict[int, float] = field(default_factory=dict)
    sum_up: dict[int, float] = field(default_factory=dict)
    n_down: dict[int, int] = field(default_factory=dict)
    n_up: dict[int, int] = field(default_factory=dict)
    sb_lp_solves: int = 0

    def record(self, col: int, direction: str, dist: float, gain: float) -> None:
        if dist <= 0 or not math.isfinite(gain):
            return
        unit = max(gain, 0.0) / dist
        if direction == "down":
            self.sum_down[col] = self.sum_down.get(col, 0.0) + unit
            self.n_down[col] = self.n_down.get(col, 0) + 1
        else:
            self.sum_up[col] = self.sum_up.get(col, 0.0) + unit
            self.n_up[col] = self.n_up.get(col, 0) + 1

    def reliable(self, col: int) -> bool:
        return self.n_down.get(col, 0) >= self.eta and self.n_up.get(col, 0) >= self.eta

    def pseudocost(self, col: int) -> tuple[float, float]:
        def mean(s, n):
            return s.get(col, 0.0) / n[col] if n.get(col) else 0.0
        return mean(self.sum_down, self.n_down), mean(self.sum_up, self.n_up)

    def force(self, col: int, pc_down: float, pc_up: float) -> None:
        """Overwrite a column's pseudocosts and mark them reliable."""
        self.sum_down[col] = pc_down * self.eta
        self.sum_up[col] = pc_up * self.eta
        self.n_down[col] = self.eta
        self.n_up[col] = self.eta


def reliability_pseudocost_select(ctx: NodeContext, state: PseudocostState) -> int:
    eps = ctx.config.epsilon_sb
    scores = []
    for i in ctx.candidates:
        i = int(i)
        f_down, f_up = ctx.fractional_parts(i)
        if state.reliable(i):
            pc_down, pc_up = state.pseudocost(i)
            scores.append(max(pc_down * f_down, eps) * max(pc_up * f_up, eps))
            continue
        fresh = sum(ctx.cached_child(i, d) is None for d in ("down", "up"))
        z_down, z_up = ctx.child_value(i, "down"), ctx.child_value(i, "up")
        state.sb_lp_solves += fresh
        if fresh:
            state.record(i, "down", f_down, z_down - ctx.value)
            state.record(i, "up", f_up, z_up - ctx.value)
        scores.append(sb_score_from_values(ctx.value, z_down, z_up, eps,
                                           ctx.config.infeasible_child_value))
    return argmax_lowest(ctx.candidates, scores)


class StrongBranching:
    name = "sb"

    def select(self, ctx: NodeContext) -> int:
        return strong_branching_select(ctx)


class MostFractional:
    name = "mostfrac"

    def select(self, ctx: NodeContext) -> int:
        return most_fractional_select(ctx)


class ReliabilityPseudocost:
    name = "relpcost"

    def __init__(self, eta: int = 4):
        self.state = PseudocostState(eta=eta)

    def select(self, ctx: NodeContext) -> int:
        return reliability_pseudocost_select(ctx, self.state)

    def fresh(self) -> "ReliabilityPseudocost":
        return ReliabilityPseudocost(self.state.eta)

    def observe(self, branch, parent_value: float, lp: LpSolution) -> None:
        col, direction, dist = branch
        if lp.status is LpStatus.OPTIMAL:
            self.state.record(col, direction, dist, lp.objective - parent_value)


def make_policy(name: str, **kwargs):
    table = {"sb": StrongBranching, "mostfrac": MostFractional, "relpcost": ReliabilityPseudocost}
    if name not in table:
        raise ValueError(f"unknown branching policy {name!r}; choose from {sorted(table)}")
    return table[name](**kwargs)
