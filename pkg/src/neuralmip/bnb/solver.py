"""Branch-and-bound over the LP relaxation with pluggable variable selection."""

from __future__ import annotations

import csv
import heapq
import io
import json
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Protocol

import numpy as np

from ..milp.problem import MilpError, MilpProblem, check_feasible
from ..milp.simplex import BasisStatus, LpSolution, LpStatus, solve_lp

FRAC_TOL = 1e-6


class NodeSelection(str, Enum):
    BEST_BOUND = "BestBound"
    DEPTH_FIRST = "DepthFirst"


class BnbStatus(str, Enum):
    OPTIMAL = "Optimal"
    FEASIBLE_LIMIT = "FeasibleLimit"
    INFEASIBLE_PROVEN = "InfeasibleProven"
    NO_INCUMBENT_LIMIT = "NoIncumbentLimit"


class BranchingPolicy(Protocol):
    name: str

    def select(self, ctx: "NodeContext") -> int: ...


@dataclass
class BnbConfig:
    """Search limits and options.

    With ``clock="work"`` elapsed time is measured as simplex iterations
    times ``work_unit`` seconds, which makes limits and timelines
    reproducible across machines and runs.
    """

    time_limit: float = math.inf
    node_limit: int | None = None
    gap_tol: float = 0.0
    node_selection: NodeSelection = NodeSelection.BEST_BOUND
    branching: BranchingPolicy | None = None
    epsilon_sb: float = 1e-6
    infeasible_child_value: float = 1e12
    seed: int = 0
    clock: str = "wall"
    work_unit: float = 1e-4
    rounding: bool = True

    def __post_init__(self):
        if self.gap_tol < 0:
            raise ValueError("gap_tol must be non-negative")
        if self.epsilon_sb <= 0:
            raise ValueError("epsilon_sb must be positive")
        if self.clock not in ("wall", "work"):
            raise ValueError("clock must be 'wall' or 'work'")
        self.node_selection = NodeSelection(self.node_selection)


@dataclass
class BnbNode:
    l: np.ndarray
    u: np.ndarray
    parent_value: float
    depth: int
    warm: object = None                 # parent's WarmStart
    lp: LpSolution | None = None        # filled when a child LP was solved during scoring
    branch: tuple[int, str, float] | None = None   # (column, "down"/"up", distance moved)


@dataclass
class Counters:
    nodes: int = 0
    lp_solves: int = 0
    child_lp_solves: int = 0
    simplex_iterations: int = 0


class NodeContext:
    """What a branching policy or node callback sees at one node.

    Child LPs requested through :meth:`child_lp` are cached and reused by
    the solver when the corresponding child is processed.
    """

    def __init__(self, solver: "_Search", node: BnbNode, lp: LpSolution, candidates: np.ndarray):
        self._solver = solver
        self.problem = solver.problem
        self.node = node
        self.lp = lp
        self.candidates = candidates
        self.incumbent_value = solver.upper
        self.incumbents = list(solver.incumbent_history)
        self.counters = solver.counters
        self.config = solver.config
        self.var_age, self.cons_age = solver.ages()
        self._children: dict[tuple[int, str], LpSolution] = {}

    @property
    def value(self) -> float:
        return self.lp.objective

    @property
    def l(self) -> np.ndarray:
        return self.node.l

    @property
    def u(self) -> np.ndarray:
        return self.node.u

    def child_bounds(self, i: int, direction: str):
        l, u = self.node.l.copy(), self.node.u.copy()
        xi = self.lp.x[i]
        if direction == "down":
            u[i] = math.floor(xi)
        elif direction == "up":
            l[i] = math.ceil(xi)
        else:
            raise ValueError(direction)
        return l, u

    def child_lp(self, i: int, direction: str) -> LpSolution:
        key = (int(i), direction)
        if key not in self._children:
            l, u = self.child_bounds(i, direction)
            sol = solve_lp(self.problem, (l, u), warm_start=self.lp.warm)
            self._solver.count_lp(sol, child=True)
            self._children[key] = sol
        return self._children[key]

    def child_value(self, i: int, direction: str) -> float:
        """Child LP objective; +inf when the child is infeasible."""
        sol = self.child_lp(i, direction)
        return sol.objective if sol.status is LpStatus.OPTIMAL else math.inf

    def cached_child(self, i: int, direction: str) -> LpSolution | None:
        return self._children.get((int(i), direction))

    def fractional_parts(self, i: int) -> tuple[float, float]:
        """(x - floor x, ceil x - x) for column ``i``."""
        xi = self.lp.x[i]
        return xi - math.floor(xi), math.ceil(xi) - xi


@dataclass
class BnbResult:
    status: BnbStatus
    incumbent: np.ndarray | None
    upper_bound: float
    lower_bound: float
    gap: float
    nodes_processed: int
    incumbent_timeline: list[tuple[float, float]] = field(default_factory=list)
    bound_timeline: list[tuple[float, float]] = field(default_factory=list)
    elapsed: float = 0.0
    lp_solves: int = 0
    simplex_iterations: int = 0

    @property
    def objective(self) -> float:
        return self.upper_bound

    @property
    def gap_percent(self) -> float:
        return 100.0 * self.gap

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "incumbent": None if self.incumbent is None else self.incumbent.tolist(),
            "upper_bound": _enc(self.upper_bound),
            "lower_bound": _enc(self.lower_bound),
            "gap": self.gap,
            "nodes_processed": self.nodes_processed,
            "incumbent_timeline": [list(p) for p in self.incumbent_timeline],
            "bound_timeline": [list(p) for p in self.bound_timeline],
            "elapsed": self.elapsed,
            "lp_solves": self.lp_solves,
            "simplex_iterations": self.simplex_iterations,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BnbResult":
        return cls(
            status=BnbStatus(d["status"]),
            incumbent=None if d["incumbent"] is None else np.array(d["incumbent"]),
            upper_bound=_dec(d["upper_bound"]),
            lower_bound=_dec(d["lower_bound"]),
            gap=d["gap"],
            nodes_processed=d["nodes_processed"],
            incumbent_timeline=[tuple(p) for p in d["incumbent_timeline"]],
            bound_timeline=[tuple(p) for p in d.get("bound_timeline", [])],
            elapsed=d.get("elapsed", 0.0),
            lp_solves=d.get("lp_solves", 0),
            simplex_iterations=d.get("simplex_iterations", 0),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True))

    def timeline_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["elapsed_s", "objective"])
        for t, obj in self.incumbent_timeline:
            w.writerow([repr(float(t)), repr(float(obj))])
        return buf.getvalue()


def _enc(v: float):
    return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")


def _dec(v) -> float:
    return float(v)


def mip_gap(upper: float, lower: float) -> float:
    """Relative gap in percent."""
    if upper == lower:
        return 0.0
    return 100.0 * (upper - lower) / max(abs(upper), 1e-10)


def fractional_candidates(problem: MilpProblem, x: np.ndarray) -> np.ndarray:
    idx = problem.integer_columns
    xi = x[idx]
    dist = np.abs(xi - np.round(xi))
    return idx[dist > FRAC_TOL]


NodeCallback = Callable[[NodeContext], "bool | None"]


def solve_bnb(problem: MilpProblem, config: BnbConfig | None = None,
              on_node: NodeCallback | None = None) -> BnbResult:
    """Minimize ``problem`` exactly or until a limit is reached.

    ``on_node`` is called with a :class:`NodeContext` at every node that
    is about to be branched on, before the branching decision.  Returning
    True from it ends the search as if a limit had been reached.
    """
    return _Search(problem, config or BnbConfig(), on_node).run()


class _Search:
    def __init__(self, problem: MilpProblem, config: BnbConfig, on_node):
        from .policies import MostFractional

        self.problem = problem
        self.config = config
        self.policy = config.branching or MostFractional()
        self.on_node = on_node
        self.counters = Counters()
        self.upper = math.inf
        self.incumbent: np.ndarray | None = None
        self.incumbent_history: list[np.ndarray] = []
        self.timeline: list[tuple[float, float]] = []
        self.bound_timeline: list[tuple[float, float]] = []
        self.lower = -math.inf
        self._t0 = time.perf_counter()
        n, m = problem.n, problem.m
        self._last_status = None
        self._last_change = np.zeros(n + m)
        self._seq = 0

    # -- bookkeeping -----------------------------------------------------

    def elapsed(self) -> float:
        if self.config.clock == "work":
            return self.counters.simplex_iterations * self.config.work_unit
        return time.perf_counter() - self._t0

    def count_lp(self, sol: LpSolution, child: bool = False) -> None:
        self.counters.simplex_iterations += sol.iterations
        if child:
            self.counters.child_lp_solves += 1
        else:
            self.counters.lp_solves += 1
            status = np.concatenate([sol.basis, sol.row_basis])
            if self._last_status is not None:
                changed = status != self._last_status
                self._last_change[changed] = self.counters.lp_solves
            else:
                self._last_change[:] = self.counters.lp_solves
            self._last_status = status

    def ages(self) -> tuple[np.ndarray, np.ndarray]:
        total = self.counters.lp_solves
        if total == 0:
            return np.zeros(self.problem.n), np.zeros(self.problem.m)
        age = (total - self._last_change) / total
        return age[: self.problem.n], age[self.problem.n:]

    def _prune_level(self) -> float:
        if not math.isfinite(self.upper):
            return math.inf
        slack = max(1e-9 * max(1.0, abs(self.upper)), self.config.gap_tol * abs(self.upper))
        return self.upper - slack

    def _try_incumbent(self, x: np.ndarray) -> bool:
        cand = x.copy()
        ints = self.problem.integer_columns
        cand[ints] = np.round(cand[ints])
        cand = np.clip(cand, self.problem.l, self.problem.u)
        if not check_feasible(self.problem, cand).feasible:
            return False
        obj = float(self.problem.c @ cand)
        if obj >= self.upper - 1e-12 * max(1.0, abs(obj)):
            return False
        self.upper = obj
        self.incumbent = cand
        self.incumbent_history.append(cand)
        self.timeline.append((self.elapsed(), obj))
        return True

    def _gap(self) -> float:
        if self.incumbent is None:
            return 1.0
        return mip_gap(self.upper, min(self.lower, self.upper)) / 100.0

    def _note_bound(self, value: float) -> None:
        value = min(value, self.upper)
        if value > self.lower:
            self.lower = value
            self.bound_timeline.append((self.elapsed(), value))

    # -- main loop ---------------------------------------------------------

    def run(self) -> BnbResult:
        p = self.problem
        cfg = self.config
        root = BnbNode(p.l.copy(), p.u.copy(), -math.inf, 0)
        heap: list = []
        stack: list[BnbNode] = []
        nxt: BnbNode | None = root
        hit_limit = False
        depth_first = cfg.node_selection is NodeSelection.DEPTH_FIRST

        def push(node: BnbNode) -> None:
            self._seq += 1
            if depth_first:
                stack.append(node)
            else:
                heapq.heappush(heap, (node.parent_value, self._seq, node))

        def open_min() -> float:
            vals = [h[0] for h in heap] + [s.parent_value for s in stack]
            return min(vals) if vals else math.inf

        while True:
            if nxt is None:
                if depth_first:
                    nxt = stack.pop() if stack else None
                else:
                    nxt = heapq.heappop(heap)[2] if heap else None
                if nxt is None:
                    break
            node, nxt = nxt, None
            if node.parent_value >= self._prune_level():
                continue
            if (cfg.node_limit is not None and self.counters.nodes >= cfg.node_limit) \
                    or self.elapsed() >= cfg.time_limit:
                push(node)
                hit_limit = True
                break

            lp = node.lp
            if lp is None:
                lp = solve_lp(p, (node.l, node.u), warm_start=node.warm)
            self.count_lp(lp)
            self.counters.nodes += 1
            if self.counters.nodes == 1:
                if lp.status is LpStatus.UNBOUNDED:
                    raise MilpError("LP relaxation is unbounded; branch-and-bound needs a bounded relaxation")
            if node.branch is not None and hasattr(self.policy, "observe") and node.lp is None:
                self.policy.observe(node.branch, node.parent_value, lp)
            if lp.status is not LpStatus.OPTIMAL:
                continue
            if lp.objective >= self._prune_level():
                continue
            if self.counters.nodes == 1:
                self._note_bound(lp.objective)

            cands = fractional_candidates(p, lp.x)
            if cands.size == 0:
                self._try_incumbent(lp.x)
                self._note_bound(min(open_min(), self.upper))
                continue
            if cfg.rounding:
                self._try_incumbent(lp.x)
                if lp.objective >= self._prune_level():
                    continue

            ctx = NodeContext(self, node, lp, cands)
            if self.on_node is not None and self.on_node(ctx):
                node.lp, node.parent_value = lp, lp.objective
                push(node)
                hit_limit = True
                break
            col = int(self.policy.select(ctx))
            if col not in set(cands.tolist()):
                raise MilpError(f"policy {self.policy.name} chose non-candidate column {col}")

            down, up = ctx.fractional_parts(col)
            children = []
            for direction, dist in (("down", down), ("up", up)):
                l, u = ctx.child_bounds(col, direction)
                cached = ctx.cached_child(col, direction)
                children.append(BnbNode(l, u, lp.objective, node.depth + 1, warm=lp.warm,
                                        lp=cached, branch=(col, direction, dist)))
            # plunge into the child the LP value leans towards
            prefer_up = up <= down
            first, second = (children[1], children[0]) if prefer_up else children
            push(second)
            nxt = first
            if not depth_first:
                self._note_bound(min(open_min(), lp.objective))

        if not hit_limit:
            status = BnbStatus.OPTIMAL if self.incumbent is not None else BnbStatus.INFEASIBLE_PROVEN
            if self.incumbent is not None:
                self._note_bound(self.upper)
        else:
            rest = open_min()
            if math.isfinite(rest):
                self._note_bound(rest)
            if self.incumbent is not None and self._gap() <= cfg.gap_tol:
                status = BnbStatus.OPTIMAL
            else:
                status = (BnbStatus.FEASIBLE_LIMIT if self.incumbent is not None
                          else BnbStatus.NO_INCUMBENT_LIMIT)
        lower = self.lower if status is not BnbStatus.INFEASIBLE_PROVEN else math.inf
        return BnbResult(
            status=status,
            incumbent=self.incumbent,
            upper_bound=self.upper,
            lower_bound=lower,
            gap=self._gap() if status is not BnbStatus.INFEASIBLE_PROVEN else 0.0,
            nodes_processed=self.counters.nodes,
            incumbent_timeline=list(self.timeline),
            bound_timeline=list(self.bound_timeline),
            elapsed=self.elapsed(),
            lp_solves=self.counters.lp_solves + self.counters.child_lp_solves,
            simplex_iterations=self.counters.simplex_iterations,
        )
