"""Acceptance suite: one PASS/FAIL line per headline criterion.

The desk pipeline (60 training instances) runs once per session; the
determinism check runs it a second time, so the whole file takes a while.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

import test_neural as tn
from conftest import enumerate_uc, random_lp, random_milp, tiny_instance
from neuralmip.bnb import BnbConfig, BnbStatus, make_policy, solve_bnb, strong_branching_select
from neuralmip.diving import DivingConfig, build_sub_mips, select_candidates, solve_parallel
from neuralmip.milp import Assignment, LpStatus, brute_force_milp, fix_variables, solve_lp
from neuralmip.pipeline import stages
from neuralmip.pipeline.config import ExperimentConfig
from neuralmip.pipeline.evaluation import read_csv
from neuralmip.pipeline.training import MODEL_KINDS
from neuralmip.power import validate_schedule
from neuralmip.power.ucmodel import build_uc_milp, decode_solution

POLICIES = ("sb", "mostfrac", "relpcost")
OBJ_TOL = 1e-6
CERT_TOL = 1e-6
TRAIN_LIMIT_S = 15 * 60
TOP1_MIN_PCT = 40.0
SIZE_RATIO_MIN = 10.0


def report(capsys, name: str, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, detail


# -- desk pipeline ------------------------------------------------------------------------------

def run_pipeline(out: Path) -> dict:
    cfg = ExperimentConfig(out_dir=str(out))
    stages.gen_system(cfg)
    stages.gen_scenarios(cfg)
    stages.collect_dive(cfg)
    stages.collect_branch(cfg)
    t0 = time.perf_counter()
    for kind in MODEL_KINDS:
        stages.train_model(cfg, kind)
    train_s = time.perf_counter() - t0
    summary = {"dive": stages.eval_dive(cfg), "branch": stages.eval_branch(cfg),
               "joint": stages.eval_joint(cfg)}
    stages.graph_sizes_stage(cfg)
    stages.plot_data_stage(cfg)
    return {"cfg": cfg, "train_s": train_s, "summary": summary}


@pytest.fixture(scope="session")
def desk(tmp_path_factory):
    return run_pipeline(tmp_path_factory.mktemp("desk") / "run")


def artifacts(run: Path) -> dict[str, bytes]:
    """Datasets, checkpoints and CSVs keyed by path relative to the run."""
    files = [p for p in run.rglob("*") if p.suffix in (".jsonl", ".ckpt", ".csv")]
    return {str(p.relative_to(run)): p.read_bytes() for p in sorted(files)}


# -- solver criteria ----------------------------------------------------------------------------

def test_oracle_equivalence(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst, checked, bad = 0.0, 0, []
    while checked < 50:
        p = random_milp(rng, 12)
        o = brute_force_milp(p)
        for pol in POLICIES:
            r = solve_bnb(p, BnbConfig(branching=make_policy(pol)))
            if o.infeasible:
                if r.status is not BnbStatus.INFEASIBLE_PROVEN:
                    bad.append((checked, pol, r.status.value))
            elif r.status is not BnbStatus.OPTIMAL:
                bad.append((checked, pol, r.status.value))
            else:
                worst = max(worst, abs(r.upper_bound - o.objective))
        checked += 1
    elapsed = time.perf_counter() - t0
    ok = not bad and worst <= OBJ_TOL and elapsed <= 60
    report(capsys, "oracle equivalence", ok,
           f"{checked} MILPs x {len(POLICIES)} policies, max |delta| {worst:.2e}, "
           f"status mismatches {len(bad)}, {elapsed:.1f}s")


def certificate_errors(problem, sol) -> tuple[float, float, float]:
    """Primal infeasibility, dual infeasibility and relative duality gap from scratch."""
    A = problem.A.toarray()
    x, y = sol.x, sol.duals
    primal = max(np.max(A @ x - problem.b, initial=0.0), np.max(problem.l - x, initial=0.0),
                 np.max(x - problem.u, initial=0.0))
    d = problem.c - A.T @ y
    dual = max(np.max(y, initial=0.0), 0.0)
    dual_obj = float(problem.b @ y)
    for j in range(problem.n):
        if d[j] > 0:
            if np.isinf(problem.l[j]):
                dual = max(dual, d[j])
            else:
                dual_obj += problem.l[j] * d[j]
        elif d[j] < 0:
            if np.isinf(problem.u[j]):
                dual = max(dual, -d[j])
            else:
                dual_obj += problem.u[j] * d[j]
    primal_obj = float(problem.c @ x)
    return primal, dual, abs(primal_obj - dual_obj) / max(1.0, abs(primal_obj))


def test_lp_certificates(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    solved, worst = 0, np.zeros(3)
    while solved < 200:
        p = random_lp(rng)
        sol = solve_lp(p)
        if sol.status is not LpStatus.OPTIMAL:
            continue
        worst = np.maximum(worst, certificate_errors(p, sol))
        solved += 1
    elapsed = time.perf_counter() - t0
    ok = bool(np.all(worst <= CERT_TOL)) and elapsed <= 30
    report(capsys, "LP certificates", ok,
           f"{solved} optimal LPs, max primal {worst[0]:.1e} dual {worst[1]:.1e} "
           f"gap {worst[2]:.1e}, {elapsed:.1f}s")


def test_uc_model_soundness(capsys):
    t0 = time.perf_counter()
    inst = tiny_instance()
    problem, vmap = build_uc_milp(inst)
    r = solve_bnb(problem)
    sched = decode_solution(r.incumbent, vmap)
    violations = sorted(validate_schedule(inst, sched).families())
    elapsed = time.perf_counter() - t0
    best, _ = enumerate_uc(inst)
    ok = (r.status is BnbStatus.OPTIMAL and not violations
          and abs(r.upper_bound - best) <= OBJ_TOL and elapsed <= 5)
    report(capsys, "UC model soundness", ok,
           f"B&B {r.upper_bound:.4f} vs enumeration {best:.4f}, violations {violations}, "
           f"{elapsed:.2f}s")


def test_gradient_suite(capsys):
    checks = [tn.test_temporal_conv_gradient, tn.test_chebyshev_gradient, tn.test_ecc_gradient,
              tn.test_bipartite_conv_gradient, tn.test_pi_gcn_full_gradient,
              tn.test_mb_gcn_full_gradient]
    t0 = time.perf_counter()
    failed = []
    for check in checks:
        try:
            check()
        except AssertionError:
            failed.append(check.__name__)
    elapsed = time.perf_counter() - t0
    ok = not failed and elapsed <= 120
    report(capsys, "gradient suite", ok,
           f"{len(checks) - len(failed)}/{len(checks)} checks within {tn.LAYER_TOL:g} (layers) "
           f"and {tn.MODEL_TOL:g} (models), {elapsed:.1f}s")


def recomputed_sb_choice(ctx) -> int:
    """Strong-branching choice from cold child LPs and the product score."""
    z = ctx.lp.objective
    scores = {}
    for i in (int(c) for c in ctx.candidates):
        factors = []
        for direction in ("down", "up"):
            l, u = ctx.node.l.copy(), ctx.node.u.copy()
            if direction == "down":
                u[i] = math.floor(ctx.lp.x[i])
            else:
                l[i] = math.ceil(ctx.lp.x[i])
            sol = solve_lp(ctx.problem, (l, u))
            factors.append(max(sol.objective - z, 1e-6) if sol.status is LpStatus.OPTIMAL
                           else 1e12)
        scores[i] = factors[0] * factors[1]
    best = max(scores.values())
    # child LPs solved cold and warm agree to rounding, so near-equal scores are ties
    return min(i for i, s in scores.items() if s >= best - 1e-9 * max(1.0, abs(best)))


def test_sb_definitional_check(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(99)
    agree = total = 0
    while total < 100:
        p = random_milp(rng, 12)
        seen = []

        def check(ctx):
            seen.append(strong_branching_select(ctx) == recomputed_sb_choice(ctx))
            return len(seen) >= 5

        solve_bnb(p, BnbConfig(branching=make_policy("sb")), on_node=check)
        seen = seen[:100 - total]
        total += len(seen)
        agree += sum(seen)
    elapsed = time.perf_counter() - t0
    ok = agree == total and elapsed <= 60
    report(capsys, "SB definitional check", ok,
           f"{agree}/{total} nodes agree with cold child-LP recomputation, {elapsed:.1f}s")


def test_diving_algorithm_soundness(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    below, recovered, unrestricted, feasible = [], [], [], 0
    for loads in ((60, 95, 120, 70), (40, 80, 100, 90), (70, 70, 110, 130)):
        inst = tiny_instance(loads)
        best, best_x = enumerate_uc(inst)
        problem, vmap = build_uc_milp(inst)
        D = vmap.x_columns.size
        for _ in range(3):
            subs = build_sub_mips(problem, rng.random(D), select_candidates(rng.random(D), 0.0),
                                  (0.0, 0.25, 0.5, 0.75, 1.0), vmap.x_columns)
            for sub in subs:
                r = solve_bnb(sub)
                if r.incumbent is not None:
                    feasible += 1
                    if r.upper_bound < best - OBJ_TOL:
                        below.append(r.upper_bound - best)
        ints = problem.integer_columns
        fixed = fix_variables(problem, Assignment(tuple((int(j), int(round(best_x[j])))
                                                        for j in ints)))
        recovered.append(abs(solve_parallel([fixed], DivingConfig()).c_min - best))
        zero = build_sub_mips(problem, np.full(D, 0.9), select_candidates(np.ones(D), 0.95),
                              (0.0,), vmap.x_columns)[0]
        plain = solve_bnb(problem).upper_bound
        unrestricted.append(solve_parallel([zero], DivingConfig()).c_min == plain)
    elapsed = time.perf_counter() - t0
    ok = not below and max(recovered) <= OBJ_TOL and all(unrestricted) and elapsed <= 60
    report(capsys, "diving algorithm soundness", ok,
           f"{feasible} feasible sub-MIPs, {len(below)} below the optimum; oracle fixing "
           f"error {max(recovered):.1e}; rho=0 equals plain on {sum(unrestricted)}/3, "
           f"{elapsed:.1f}s")


# -- desk-scale trends --------------------------------------------------------------------------

def test_accuracy_interval_trend(desk, capsys):
    cfg = desk["cfg"]
    rows = {r["model"]: [int(v) for k, v in r.items() if k != "model"]
            for r in read_csv(cfg.out / "accuracy_intervals.csv")}
    header = [k for k in read_csv(cfg.out / "accuracy_intervals.csv")[0] if k != "model"]
    at95 = header.index("acc_ge_0.95")
    pi, mb, maj = rows["pi-gcn"][at95], rows["mb-gcn"][at95], rows["majority"][at95]
    monotone = all(c == sorted(c, reverse=True) for c in rows.values())
    ok = (pi >= mb and pi > maj and mb > maj and monotone and cfg.n_train == 60
          and desk["train_s"] <= TRAIN_LIMIT_S)
    report(capsys, "accuracy-interval trend", ok,
           f"Acc>=0.95 counts PI {pi}, MB {mb}, majority {maj}; monotone {monotone}; "
           f"training {desk['train_s']:.0f}s on {cfg.n_train} instances")


def test_dive_cost_trend(desk, capsys):
    rows = read_csv(desk["cfg"].out / "dive_results.csv")
    plain = np.array([float(r["plain_cost"]) for r in rows])
    mb = np.array([float(r["mb_cost"]) for r in rows])
    pi = np.array([float(r["pi_cost"]) for r in rows])
    # costs are repriced from schedules, so equal schedules can differ in the last bits
    worse = int(np.sum(pi > plain * (1 + 1e-9)))
    ok = len(rows) >= 10 and worse == 0 and pi.mean() <= plain.mean() * (1 + 1e-9)
    report(capsys, "diving cost trend", ok,
           f"{len(rows)} test instances, mean cost plain {plain.mean():.2f} MB {mb.mean():.2f} "
           f"PI {pi.mean():.2f}; PI worse than plain on {worse}")


def test_branching_trend(desk, capsys):
    cfg = desk["cfg"]
    rows = read_csv(cfg.out / "branch_results.csv")
    summary = read_csv(cfg.out / "branch_summary.csv")[0]
    rel, learned = float(summary["mean_relpcost_gap"]), float(summary["mean_learned_gap"])
    top1, chance = float(summary["top1_pct"]), float(summary["chance_pct"])
    ok = len(rows) >= 10 and learned <= rel and top1 >= TOP1_MIN_PCT
    report(capsys, "branching trend", ok,
           f"{len(rows)} instances at {cfg.branch_eval_nodes} nodes: mean gap learned "
           f"{learned:.3f}% vs relpcost {rel:.3f}%; top-1 SB agreement {top1:.1f}% "
           f"(chance {chance:.1f}%) on {summary['heldout_nodes']} held-out nodes")


def test_graph_size_structure(desk, capsys):
    cfg = desk["cfg"]
    rows = read_csv(cfg.out / "graph_sizes.csv")
    n_buses = len(json.loads((cfg.out / "system.json").read_text())["buses"])
    pi_ok = all(int(r["pi_nodes"]) == n_buses for r in rows)
    bip_ok = all(int(r["bipartite_nodes"]) == int(r["milp_rows"]) + int(r["milp_cols"])
                 for r in rows)
    ratio = min(float(r["ratio"]) for r in rows)
    ok = pi_ok and bip_ok and ratio >= SIZE_RATIO_MIN and len(rows) == len(stages.instances(cfg))
    report(capsys, "graph-size structure", ok,
           f"{len(rows)} instances, PI nodes = {n_buses} buses: {pi_ok}; bipartite = m+n: "
           f"{bip_ok}; min ratio {ratio:.1f}x")


def test_pipeline_determinism(desk, tmp_path, capsys):
    first = artifacts(desk["cfg"].out)
    second = artifacts(run_pipeline(tmp_path / "again")["cfg"].out)
    differing = sorted(k for k in first.keys() | second.keys() if first.get(k) != second.get(k))
    kinds = {Path(k).suffix for k in first}
    ok = bool(first) and not differing and {".jsonl", ".ckpt", ".csv"} <= kinds
    report(capsys, "pipeline determinism", ok,
           f"{len(first)} artifacts compared byte for byte, differing {differing}")
