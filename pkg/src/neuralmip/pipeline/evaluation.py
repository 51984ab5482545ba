"""Evaluations producing the result tables and figure data as CSV."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ..bnb.policies import argmax_lowest, make_policy
from ..bnb.solver import BnbConfig, BnbResult, NodeContext, solve_bnb
from ..diving import DivingConfig, NoSolution, dive, predict_x_probs
from ..graphs import bipartite_from_context, graph_sizes
from ..nn.losses import accuracy_per_dim
from ..nn.models import ModelConfig, ParamStore, mb_gcn_forward
from ..power.system import UcInstance
from ..power.ucmodel import build_uc_milp, decode_solution, schedule_cost, validate_schedule
from .config import ExperimentConfig
from .data import BranchingSample, DivingSample, InstanceRecord, parallel_map

ACC_THRESHOLDS = (0.80, 0.85, 0.90, 0.95, 1.00)


class EvaluationError(RuntimeError):
    pass


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return repr(v) if math.isfinite(v) else ("inf" if v > 0 else ("-inf" if v < 0 else "nan"))
    return str(v)


def write_csv(path: str | Path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_csv(path: str | Path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


@dataclass
class Model:
    params: ParamStore
    config: ModelConfig
    extra: dict


class NeuralBranching:
    """Branch on the candidate with the highest MB-GCN score."""

    name = "mb-gcn"

    def __init__(self, params: ParamStore):
        self.params = params

    def scores(self, ctx: NodeContext) -> np.ndarray:
        graph = bipartite_from_context(ctx)
        return mb_gcn_forward(graph, self.params, ctx.candidates).value

    def select(self, ctx: NodeContext) -> int:
        return argmax_lowest(ctx.candidates, self.scores(ctx))


def accuracy_counts(acc) -> list[int]:
    acc = np.asarray(acc, dtype=float)
    return [int(np.sum(acc >= th - 1e-12)) for th in ACC_THRESHOLDS]


def _checked_cost(instance: UcInstance, vmap, x) -> float:
    sched = decode_solution(x, vmap)
    report = validate_schedule(instance, sched)
    if not report.ok:
        raise EvaluationError(f"{instance.name}: schedule fails validation ({sorted(report.families())})")
    return schedule_cost(sched, vmap.cu1, vmap.cb1)


@dataclass
class RunOutcome:
    cost: float
    elapsed: float
    timeline: list[tuple[float, float]]
    gap: float = math.nan
    fell_back: bool = False
    n_candidates: int = 0


def _plain(instance: UcInstance, problem, vmap, budget: BnbConfig) -> RunOutcome:
    r = solve_bnb(problem, budget)
    if r.incumbent is None:
        return RunOutcome(math.inf, r.elapsed, [], 100.0)
    return RunOutcome(_checked_cost(instance, vmap, r.incumbent), r.elapsed,
                      list(r.incumbent_timeline), r.gap_percent)


def _dive(instance: UcInstance, problem, vmap, probs, acc, dcfg: DivingConfig) -> RunOutcome:
    try:
        out = dive(problem, probs, acc, vmap.x_columns, dcfg)
    except NoSolution:
        return RunOutcome(math.inf, 0.0, [], fell_back=True)
    elapsed = sum(s.result.elapsed for s in out.subs if s.result is not None)
    n_cands = int(np.sum(np.asarray(acc) >= dcfg.epsilon))
    return RunOutcome(_checked_cost(instance, vmap, out.x_min), elapsed, out.timeline,
                      fell_back=out.fell_back, n_candidates=n_cands)


def _policy_config(budget: BnbConfig, policy) -> BnbConfig:
    return replace(budget, branching=policy)


# -- diving ------------------------------------------------------------------------

def evaluate_diving(tests: list[InstanceRecord], test_samples: list[DivingSample], pi: Model,
                    mb: Model, cfg: ExperimentConfig, out_dir: str | Path,
                    baseline: str = "relpcost") -> dict:
    """Plain solve vs MB-GCN and PI-GCN diving under the same budget.

    Writes ``dive_results.csv``, ``accuracy_intervals.csv`` and
    ``dive_timelines.csv``; returns a summary dict.
    """
    out_dir = Path(out_dir)
    budget = cfg.solver_config()

    def run(rec: InstanceRecord):
        problem, vmap = build_uc_milp(rec.instance)
        plain = _plain(rec.instance, problem, vmap,
                       _policy_config(budget, make_policy(baseline)))
        res = {"plain": plain}
        for name, model in (("mb", mb), ("pi", pi)):
            probs = predict_x_probs(rec.instance, model.params, model.config, problem, vmap)
            dcfg = replace(cfg.diving_config(), sub_solver=_policy_config(budget, make_policy(baseline)))
            res[name] = _dive(rec.instance, problem, vmap, probs, np.array(model.extra["valid_acc"]),
                              dcfg)
        return res

    results = parallel_map(run, tests, cfg.workers)
    rows, tl_rows = [], []
    for rec, res in zip(tests, results):
        p, m, q = res["plain"], res["mb"], res["pi"]
        rows.append([rec.id, p.cost, m.cost, q.cost, p.gap, p.elapsed, m.elapsed, q.elapsed,
                     m.fell_back, q.fell_back, m.n_candidates, q.n_candidates])
        for method, o in (("plain", p), ("mb-gcn-dive", m), ("pi-gcn-dive", q)):
            tl_rows.extend([rec.id, method, t, obj] for t, obj in o.timeline)
    write_csv(out_dir / "dive_results.csv",
              ["instance", "plain_cost", "mb_cost", "pi_cost", "plain_gap", "plain_time",
               "mb_time", "pi_time", "mb_fell_back", "pi_fell_back", "mb_candidates",
               "pi_candidates"], rows)
    write_csv(out_dir / "dive_timelines.csv", ["instance", "method", "elapsed_s", "objective"],
              tl_rows)

    # accuracy intervals on the test split
    targets = np.array([s.x for s in test_samples])
    acc = {}
    for name, model in (("pi-gcn", pi), ("mb-gcn", mb)):
        probs = np.array([predict_x_probs(rec.instance, model.params, model.config)
                          for rec in _records_for(tests, test_samples)])
        acc[name] = accuracy_per_dim(probs, targets)
    majority = np.array(pi.extra["majority"], dtype=float)
    acc["majority"] = accuracy_per_dim(np.tile(majority, (len(targets), 1)), targets)
    write_csv(out_dir / "accuracy_intervals.csv",
              ["model"] + [f"acc_ge_{th:.2f}" for th in ACC_THRESHOLDS],
              [[name] + accuracy_counts(a) for name, a in acc.items()])

    costs = np.array([[r[1], r[2], r[3]] for r in rows])
    return {
        "mean_plain": float(costs[:, 0].mean()),
        "mean_mb": float(costs[:, 1].mean()),
        "mean_pi": float(costs[:, 2].mean()),
        "pi_worse_than_plain": int(np.sum(costs[:, 2] > costs[:, 0] * (1 + 1e-9))),
        "counts": {k: accuracy_counts(v) for k, v in acc.items()},
    }


def _records_for(tests: list[InstanceRecord], samples: list[DivingSample]) -> list[InstanceRecord]:
    by_id = {r.id: r for r in tests}
    missing = [s.id for s in samples if s.id not in by_id]
    if missing:
        raise EvaluationError(f"test samples without instances: {missing}")
    return [by_id[s.id] for s in samples]


# -- branching ---------------------------------------------------------------------

def gap_curve(result: BnbResult) -> list[tuple[float, float]]:
    """MIP gap (percent) after every incumbent or bound change."""
    events = sorted([(t, 0, v) for t, v in result.incumbent_timeline]
                    + [(t, 1, v) for t, v in result.bound_timeline])
    upper, lower, out = math.inf, -math.inf, []
    for t, kind, v in events:
        if kind == 0:
            upper = min(upper, v)
        else:
            lower = max(lower, v)
        gap = 100.0 if not math.isfinite(upper) or not math.isfinite(lower) else \
            max(0.0, 100.0 * (upper - lower) / max(abs(upper), 1e-10))
        out.append((t, gap))
    return out


def top1_agreement(params: ParamStore, samples: list[BranchingSample]) -> tuple[float, float]:
    """(share of samples where the model's argmax is the SB choice, mean 1/|C|)."""
    from ..nn.models import mb_inputs

    if not samples:
        return math.nan, math.nan
    hits = []
    for s in samples:
        y = mb_gcn_forward(mb_inputs(s.graph), params, s.candidates).value
        hits.append(argmax_lowest(s.candidates, y) == s.chosen)
    return float(np.mean(hits)), float(np.mean([1.0 / len(s.candidates) for s in samples]))


def evaluate_branching(tests: list[InstanceRecord], branch: Model, cfg: ExperimentConfig,
                       out_dir: str | Path, heldout: list[BranchingSample] = ()) -> dict:
    """Reliability pseudocost vs the learned policy at a fixed node budget.

    Writes ``branch_results.csv`` and ``branch_gap_time.csv``.
    """
    out_dir = Path(out_dir)
    budget = cfg.solver_config(node_limit=cfg.branch_eval_nodes)

    def run(rec: InstanceRecord):
        problem, vmap = build_uc_milp(rec.instance)
        out = {}
        for name, policy in (("relpcost", make_policy("relpcost")),
                             ("learned", NeuralBranching(branch.params))):
            r = solve_bnb(problem, _policy_config(budget, policy))
            if r.incumbent is not None:
                _checked_cost(rec.instance, vmap, r.incumbent)
            out[name] = r
        return out

    results = parallel_map(run, tests, cfg.workers)
    rows, curve_rows = [], []
    for rec, res in zip(tests, results):
        mine = [s for s in heldout if s.id == rec.id]
        top1, _ = top1_agreement(branch.params, mine)
        rp, ln = res["relpcost"], res["learned"]
        rows.append([rec.id, rp.gap_percent, ln.gap_percent, rp.upper_bound, ln.upper_bound,
                     rp.lower_bound, ln.lower_bound, rp.nodes_processed, ln.nodes_processed,
                     100.0 * top1 if mine else math.nan, len(mine)])
        for name, r in res.items():
            curve_rows.extend([rec.id, name, t, g] for t, g in gap_curve(r))
    write_csv(out_dir / "branch_results.csv",
              ["instance", "relpcost_gap", "learned_gap", "relpcost_upper", "learned_upper",
               "relpcost_lower", "learned_lower", "relpcost_nodes", "learned_nodes",
               "top1_agreement_pct", "heldout_nodes"], rows)
    write_csv(out_dir / "branch_gap_time.csv", ["instance", "policy", "elapsed_s", "gap_pct"],
              curve_rows)
    top1, chance = top1_agreement(branch.params, list(heldout))
    summary = {
        "mean_relpcost_gap": float(np.mean([r[1] for r in rows])),
        "mean_learned_gap": float(np.mean([r[2] for r in rows])),
        "top1_pct": 100.0 * top1,
        "chance_pct": 100.0 * chance,
        "heldout_nodes": len(heldout),
    }
    write_csv(out_dir / "branch_summary.csv", list(summary), [list(summary.values())])
    return summary


# -- joint -------------------------------------------------------------------------

def evaluate_joint(tests: list[InstanceRecord], pi: Model, branch: Model, cfg: ExperimentConfig,
                   out_dir: str | Path, baseline: str = "relpcost") -> dict:
    """Plain, dive-only, branch-only and dive+branch under one budget.

    Writes ``joint_results.csv`` and ``joint_timelines.csv``.
    """
    out_dir = Path(out_dir)
    budget = cfg.solver_config()
    acc = np.array(pi.extra["valid_acc"])

    def run(rec: InstanceRecord):
        problem, vmap = build_uc_milp(rec.instance)
        probs = predict_x_probs(rec.instance, pi.params, pi.config, problem, vmap)
        base = _policy_config(budget, make_policy(baseline))
        learned = _policy_config(budget, NeuralBranching(branch.params))
        dcfg = cfg.diving_config()
        return {
            "plain": _plain(rec.instance, problem, vmap, base),
            "dive": _dive(rec.instance, problem, vmap, probs, acc, replace(dcfg, sub_solver=base)),
            "branch": _plain(rec.instance, problem, vmap, learned),
            "dive_branch": _dive(rec.instance, problem, vmap, probs, acc,
                                 replace(dcfg, sub_solver=learned)),
        }

    results = parallel_map(run, tests, cfg.workers)
    methods = ("plain", "dive", "branch", "dive_branch")
    rows, tl_rows = [], []
    for rec, res in zip(tests, results):
        rows.append([rec.id] + [res[m].cost for m in methods] + [res[m].elapsed for m in methods])
        for m in methods:
            tl_rows.extend([rec.id, m, t, obj] for t, obj in res[m].timeline)
    write_csv(out_dir / "joint_results.csv",
              ["instance"] + [f"{m}_cost" for m in methods] + [f"{m}_time" for m in methods], rows)
    write_csv(out_dir / "joint_timelines.csv", ["instance", "method", "elapsed_s", "objective"],
              tl_rows)
    return {f"mean_{m}": float(np.mean([r[1 + k] for r in rows])) for k, m in enumerate(methods)}


# -- graph sizes and figure data -------------------------------------------------

def report_graph_sizes(instances: list[InstanceRecord], out_path: str | Path) -> list[dict]:
    rows = []
    for rec in instances:
        problem, _ = build_uc_milp(rec.instance)
        sz = graph_sizes(rec.instance, problem)
        rows.append({"instance": rec.id, "n_buses": rec.instance.system.n_buses,
                     "milp_rows": problem.m, "milp_cols": problem.n, **sz,
                     "ratio": sz["bipartite_nodes"] / sz["pi_nodes"]})
    header = ["instance", "n_buses", "pi_nodes", "pi_edges", "bipartite_nodes", "bipartite_edges",
              "milp_rows", "milp_cols", "ratio"]
    write_csv(out_path, header, [[r[h] for h in header] for r in rows])
    return rows


FIGURES = {
    "fig_dive_timelines.csv": "dive_timelines.csv",
    "fig_gap_vs_time.csv": "branch_gap_time.csv",
    "fig_joint_timelines.csv": "joint_timelines.csv",
    "table_accuracy_intervals.csv": "accuracy_intervals.csv",
    "table_dive_costs.csv": "dive_results.csv",
    "table_branch_gaps.csv": "branch_results.csv",
    "table_joint_costs.csv": "joint_results.csv",
    "table_graph_sizes.csv": "graph_sizes.csv",
}


def plot_data(out_dir: str | Path) -> list[Path]:
    """Gather per-figure CSVs under ``<out_dir>/plots``; returns the files written."""
    out_dir = Path(out_dir)
    plots = out_dir / "plots"
    written = []
    curves = sorted((out_dir / "curves").glob("*.csv")) if (out_dir / "curves").is_dir() else []
    if curves:
        rows = []
        for path in curves:
            for r in read_csv(path):
                rows.append([path.stem] + list(r.values()))
        header = ["model"] + list(read_csv(curves[0])[0].keys()) if rows else ["model"]
        write_csv(plots / "fig_training_curves.csv", header, rows)
        written.append(plots / "fig_training_curves.csv")
    for target, source in FIGURES.items():
        src = out_dir / source
        if src.exists():
            plots.mkdir(parents=True, exist_ok=True)
            (plots / target).write_bytes(src.read_bytes())
            written.append(plots / target)
    return written
