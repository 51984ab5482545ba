"""Model-guided diving: fix confident state variables and solve the sub-MIPs in parallel."""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .bnb.solver import BnbConfig, BnbResult, BnbStatus, solve_bnb
from .graphs import build_bipartite_graph, build_spatial_graph, build_spatiotemporal_graph
from .milp.problem import Assignment, MilpProblem, MilpError, fix_variables
from .milp.simplex import LpStatus, solve_lp
from .nn.losses import probabilities
from .nn.models import ModelConfig, ParamStore, mb_gcn_forward, pi_gcn_forward
from .power.system import UcInstance
from .power.ucmodel import UcSchedule, VariableMap, build_uc_milp, decode_solution

DEFAULT_RATIOS = (0.75, 0.80, 0.85, 0.90, 0.95, 1.00)


class NoSolution(RuntimeError):
    """No sub-MIP produced an incumbent."""


@dataclass
class DivingConfig:
    epsilon: float = 0.95
    ratios: tuple[float, ...] = DEFAULT_RATIOS
    sub_solver: BnbConfig = field(default_factory=BnbConfig)
    workers: int = 1

    def __post_init__(self):
        self.ratios = tuple(float(r) for r in self.ratios)
        if not 0 <= self.epsilon <= 1:
            raise ValueError("epsilon must lie in [0, 1]")
        if any(not 0 <= r <= 1 for r in self.ratios) or list(self.ratios) != sorted(self.ratios):
            raise ValueError("ratios must lie in [0, 1] and be sorted ascending")
        if not self.ratios:
            raise ValueError("at least one ratio is required")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class CandidateSet:
    entries: tuple[tuple[int, float], ...]     # (dimension, accuracy), best first

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def dims(self) -> list[int]:
        return [d for d, _ in self.entries]


def select_candidates(acc, epsilon: float) -> CandidateSet:
    """Dimensions with accuracy >= epsilon, most accurate first (ties: lower dimension)."""
    acc = np.asarray(acc, dtype=float)
    keep = [d for d in range(acc.size) if acc[d] >= epsilon]
    keep.sort(key=lambda d: (-acc[d], d))
    return CandidateSet(tuple((d, float(acc[d])) for d in keep))


def fix_count(ratio: float, n_candidates: int) -> int:
    return int(math.floor(ratio * n_candidates + 1e-12))


def build_sub_mips(problem: MilpProblem, probs, cands: CandidateSet, ratios,
                   dim_columns) -> list[MilpProblem]:
    """One restricted problem per ratio; ``dim_columns[d]`` is the column of dimension ``d``."""
    probs = np.asarray(probs, dtype=float)
    cols = np.asarray(dim_columns, dtype=int)
    subs = []
    for rho in ratios:
        k = fix_count(rho, len(cands))
        pairs = tuple((int(cols[d]), int(np.floor(probs[d] + 0.5))) for d in cands.dims[:k])
        subs.append(fix_variables(problem, Assignment(pairs)))
    return subs


@dataclass
class SubResult:
    ratio: float | None
    n_fixed: int
    result: BnbResult | None
    infeasible: bool

    @property
    def objective(self) -> float:
        if self.result is None or self.result.incumbent is None:
            return math.inf
        return self.result.upper_bound


@dataclass
class DiveOutcome:
    c_min: float
    x_min: np.ndarray
    best_index: int
    subs: list[SubResult]
    timeline: list[tuple[float, float]]
    fell_back: bool = False

    def report(self) -> dict:
        return {
            "c_min": self.c_min,
            "best_index": self.best_index,
            "fell_back": self.fell_back,
            "subs": [{"ratio": s.ratio, "n_fixed": s.n_fixed, "infeasible": s.infeasible,
                      "status": None if s.result is None else s.result.status.value,
                      "objective": None if not math.isfinite(s.objective) else s.objective,
                      "elapsed": None if s.result is None else s.result.elapsed}
                     for s in self.subs],
            "timeline": [list(p) for p in self.timeline],
        }

    def dumps(self) -> str:
        return json.dumps(self.report(), sort_keys=True)


def split_budget(config: BnbConfig, parts: int) -> BnbConfig:
    """Even share of the time and node limits for each of ``parts`` solves."""
    nodes = None if config.node_limit is None else max(1, config.node_limit // parts)
    return replace(config, time_limit=config.time_limit / parts, node_limit=nodes)


def merge_timelines(results, offsets=None) -> list[tuple[float, float]]:
    """Best-so-far curve over several incumbent timelines."""
    events = []
    for k, r in enumerate(results):
        if r is None:
            continue
        off = 0.0 if offsets is None else offsets[k]
        events.extend((t + off, obj) for t, obj in r.incumbent_timeline)
    events.sort()
    out, best = [], math.inf
    for t, obj in events:
        if obj < best:
            best = obj
            out.append((t, obj))
    return out


def _solve_all(sub_mips: list[MilpProblem], config: DivingConfig) -> list[BnbResult]:
    sub_cfg = split_budget(config.sub_solver, len(sub_mips))

    def run(k: int) -> BnbResult:
        # stateful policies get their own copy per solve
        return solve_bnb(sub_mips[k], replace(sub_cfg, branching=_fresh_policy(sub_cfg.branching)))

    workers = min(config.workers, len(sub_mips))
    if workers == 1:
        return [run(k) for k in range(len(sub_mips))]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, range(len(sub_mips))))


def _outcome(results: list[BnbResult], ratios, n_fixed) -> DiveOutcome:
    subs = [SubResult(None if ratios is None else ratios[k], 0 if n_fixed is None else n_fixed[k],
                      r, r.status is BnbStatus.INFEASIBLE_PROVEN)
            for k, r in enumerate(results)]
    objs = [s.objective for s in subs]
    best = int(np.argmin(objs))
    if not math.isfinite(objs[best]):
        raise NoSolution("every sub-MIP was infeasible or ended without an incumbent")
    # each sub-MIP timeline is on its own clock, as if all ran side by side
    return DiveOutcome(objs[best], results[best].incumbent, best, subs, merge_timelines(results))


def solve_parallel(sub_mips: list[MilpProblem], config: DivingConfig,
                   ratios=None, n_fixed=None) -> DiveOutcome:
    """Solve every sub-MIP under an even budget share and keep the best incumbent.

    Results are slotted by position, so the outcome does not depend on
    which worker finishes first.
    """
    if not sub_mips:
        raise ValueError("no sub-MIPs to solve")
    return _outcome(_solve_all(sub_mips, config), ratios, n_fixed)


def _fresh_policy(policy):
    fresh = getattr(policy, "fresh", None)
    return fresh() if callable(fresh) else policy


def dive(problem: MilpProblem, probs, acc, dim_columns, config: DivingConfig) -> DiveOutcome:
    """Candidate selection, restriction and parallel solve, with a plain-solve fallback.

    The fallback gets whatever time and node budget the sub-MIP solves left unused.
    """
    cands = select_candidates(acc, config.epsilon)
    subs = build_sub_mips(problem, probs, cands, config.ratios, dim_columns)
    n_fixed = [fix_count(r, len(cands)) for r in config.ratios]
    results = _solve_all(subs, config)
    try:
        return _outcome(results, list(config.ratios), n_fixed)
    except NoSolution:
        pass
    cfg = config.sub_solver
    time_left = max(cfg.time_limit - sum(r.elapsed for r in results), 0.0)
    nodes_left = None if cfg.node_limit is None else \
        max(cfg.node_limit - sum(r.nodes_processed for r in results), 0)
    fallback = solve_bnb(problem, replace(cfg, time_limit=time_left, node_limit=nodes_left,
                                          branching=_fresh_policy(cfg.branching)))
    if fallback.incumbent is None:
        raise NoSolution("no incumbent from the sub-MIPs or the fallback solve")
    subs_out = [SubResult(config.ratios[k], n_fixed[k], r, r.status is BnbStatus.INFEASIBLE_PROVEN)
                for k, r in enumerate(results)]
    return DiveOutcome(fallback.upper_bound, fallback.incumbent, -1, subs_out,
                       list(fallback.incumbent_timeline), fell_back=True)


def predict_x_probs(instance: UcInstance, params: ParamStore, config: ModelConfig,
                    problem: MilpProblem | None = None, vmap: VariableMap | None = None) -> np.ndarray:
    """P(x_{g,t} = 1) for every state variable, flattened generator-major."""
    if config.kind == "pi-gcn":
        st = build_spatiotemporal_graph(instance)
        spg = build_spatial_graph(instance, config.max_segments)
        return probabilities(pi_gcn_forward(st, spg, params, config)).ravel()
    if problem is None or vmap is None:
        problem, vmap = build_uc_milp(instance)
    root = solve_lp(problem)
    if root.status is not LpStatus.OPTIMAL:
        raise MilpError(f"root LP is {root.status.value}; no bipartite features")
    graph = build_bipartite_graph(problem, root)
    return probabilities(mb_gcn_forward(graph, params, vmap.x_columns))


@dataclass
class NeuralDiveResult:
    schedule: UcSchedule
    c_min: float
    timeline: list[tuple[float, float]]
    outcome: DiveOutcome


def neural_dive(instance: UcInstance, params: ParamStore, model_config: ModelConfig, acc,
                config: DivingConfig) -> NeuralDiveResult:
    """Predict state probabilities, dive, and decode the best schedule."""
    problem, vmap = build_uc_milp(instance)
    probs = predict_x_probs(instance, params, model_config, problem, vmap)
    acc = np.asarray(acc, dtype=float)
    if acc.shape != probs.shape:
        raise ValueError(f"accuracy vector has {acc.size} entries, expected {probs.size}")
    out = dive(problem, probs, acc, vmap.x_columns, config)
    return NeuralDiveResult(decode_solution(out.x_min, vmap), out.c_min, out.timeline, out)
