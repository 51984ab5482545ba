import csv
import json
import math

import numpy as np
import pytest

from conftest import enumerate_uc, tiny_instance
from neuralmip.bnb import BnbConfig, StrongBranching, sb_score_from_values, solve_bnb
from neuralmip.bnb.policies import TIE_RTOL
from neuralmip.milp import LpStatus, solve_lp
from neuralmip.pipeline.cli import EXIT_CONFIG, EXIT_NO_SOLUTION, EXIT_OK, main
from neuralmip.pipeline.config import ConfigError, ExperimentConfig
from neuralmip.pipeline.data import (DatasetError, InstanceRecord, collect_branching_dataset,
                                     collect_diving_dataset, load_branching_dataset,
                                     load_diving_dataset)
from neuralmip.pipeline.training import train
from neuralmip.nn import ModelConfig, TrainConfig

SMALL = {
    "n_train": 4, "n_valid": 2, "n_test": 2, "node_limit": 300, "time_limit": 3.0,
    "branch_node_cap": 3, "branch_train_instances": 4, "branch_eval_nodes": 10,
    "dive_train": {"epochs": 3, "patience": 2, "early_stop": 3, "learning_rate": 0.001},
    "branch_train": {"epochs": 3, "patience": 2, "early_stop": 3},
}


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def tiny_records(n=3):
    loads = [(60, 95, 120, 70), (40, 80, 100, 90), (70, 70, 110, 130)]
    splits = ["train", "valid", "test"]
    return [InstanceRecord(f"t{k}", splits[k % 3], tiny_instance(loads[k]))
            for k in range(n)]


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("small")
    cfg_path = out / "cfg.json"
    cfg_path.write_text(json.dumps({**SMALL, "out_dir": str(out / "run")}))
    assert main(["run-all", "--config", str(cfg_path)]) == EXIT_OK
    return out / "run", cfg_path


# -- configuration and CLI ----------------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"n_trian": 3})
    with pytest.raises(ConfigError):
        ExperimentConfig(peak_range=(300.0, 100.0))
    with pytest.raises(ConfigError):
        ExperimentConfig(dive_train={"learning_rate": -1})
    cfg = ExperimentConfig(**SMALL)
    assert ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


def test_cli_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"clock": "sundial"}')
    assert main(["gen-system", "--config", str(bad)]) == EXIT_CONFIG
    assert main(["gen-system", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_cli_solve_and_no_solution_exit_codes(tmp_path):
    out = str(tmp_path / "run")
    assert main(["gen-scenarios", "--out-dir", out]) == EXIT_OK
    assert main(["solve", "--out-dir", out, "--policy", "mostfrac"]) == EXIT_OK
    solved = json.loads(next((tmp_path / "run" / "solves").glob("*.json")).read_text())
    assert solved["violations"] == []
    assert main(["solve", "--out-dir", out, "--node-limit", "0"]) == EXIT_NO_SOLUTION
    assert main(["collect-dive", "--out-dir", out, "--node-limit", "0"]) == EXIT_NO_SOLUTION


# -- datasets -------------------------------------------------------------------------------------

def test_diving_dataset_matches_oracle(tmp_path):
    recs = tiny_records()
    path = tmp_path / "dive.jsonl"
    assert collect_diving_dataset(recs, BnbConfig(), path) == 3
    samples = load_diving_dataset(path)
    for rec, s in zip(recs, samples):
        best, _ = enumerate_uc(rec.instance)
        assert s.objective == pytest.approx(best, abs=1e-6)
        assert set(np.unique(s.x)) <= {0, 1}
    again = tmp_path / "again.jsonl"
    collect_diving_dataset(recs, BnbConfig(), again)
    assert path.read_bytes() == again.read_bytes()
    with pytest.raises(DatasetError):
        collect_diving_dataset(recs, BnbConfig(node_limit=0), tmp_path / "empty.jsonl")


def test_branching_samples_are_sb_argmax(tmp_path):
    recs = tiny_records(2)
    path = tmp_path / "branch.jsonl"
    n = collect_branching_dataset(recs, 5, BnbConfig(), path)
    samples = load_branching_dataset(path)
    assert n == len(samples) and n > 0
    for rec in recs:
        mine = [s for s in samples if s.id == rec.id]
        assert len(mine) <= 5
        # replay the deterministic search and recompute each choice from fresh child LPs
        from neuralmip.power.ucmodel import build_uc_milp
        problem, _ = build_uc_milp(rec.instance)
        choices = []

        def replay(ctx):
            scores = []
            for i in ctx.candidates:
                vals = []
                for direction in ("down", "up"):
                    sol = solve_lp(problem, ctx.child_bounds(int(i), direction))
                    vals.append(sol.objective if sol.status is LpStatus.OPTIMAL else math.inf)
                scores.append(sb_score_from_values(ctx.value, *vals))
            cut = max(scores) - TIE_RTOL * max(1.0, abs(max(scores)))
            choices.append(min(int(c) for c, s in zip(ctx.candidates, scores) if s >= cut))
            return len(choices) >= len(mine)

        solve_bnb(problem, BnbConfig(branching=StrongBranching()), on_node=replay)
        assert choices == [s.chosen for s in mine]
        assert all(s.chosen in s.candidates for s in mine)


def test_branching_node_cap(tmp_path):
    path = tmp_path / "b.jsonl"
    collect_branching_dataset(tiny_records(2), 1, BnbConfig(), path)
    samples = load_branching_dataset(path)
    assert {s.id for s in samples} <= {"t0", "t1"}
    assert all(sum(s.id == i for s in samples) <= 1 for i in ("t0", "t1"))
    assert collect_branching_dataset(tiny_records(1), 0, BnbConfig(), tmp_path / "z.jsonl") == 0


# -- training ------------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def dive_samples(tmp_path_factory):
    path = tmp_path_factory.mktemp("d") / "dive.jsonl"
    collect_diving_dataset(tiny_records(), BnbConfig(), path)
    return load_diving_dataset(path)


def test_train_early_stop_zero_runs_one_epoch(dive_samples):
    res = train(dive_samples, "mb-gcn-dive", TrainConfig(epochs=20, early_stop=0),
                ModelConfig(kind="mb-gcn"))
    assert len(res.curves) == 1 and res.best_epoch == 1


def test_train_is_deterministic(dive_samples):
    runs = [train(dive_samples, "mb-gcn-dive", TrainConfig(epochs=3), ModelConfig(kind="mb-gcn"))
            for _ in range(2)]
    assert runs[0].curves_csv() == runs[1].curves_csv()
    with pytest.raises(ValueError):
        train(dive_samples, "cnn", TrainConfig(), ModelConfig())


def test_training_overfits_one_instance(dive_samples):
    one = dive_samples[0]
    samples = [one, type(one)(**{**one.__dict__, "split": "valid"})]
    tcfg = TrainConfig(epochs=150, early_stop=150, patience=150, beta=0.0)
    res = train(samples, "mb-gcn-dive", tcfg, ModelConfig(kind="mb-gcn"))
    initial = res.curves[0][1]
    final = min(c[1] for c in res.curves[-5:])
    assert final < 0.01 * initial


# -- full small run -----------------------------------------------------------------------------

def test_run_all_outputs(small_run):
    run, _ = small_run
    dive = read_rows(run / "dive_results.csv")
    assert {"instance", "plain_cost", "mb_cost", "pi_cost", "plain_gap"} <= set(dive[0])
    assert len(dive) == SMALL["n_test"]
    acc = read_rows(run / "accuracy_intervals.csv")
    assert [r["model"] for r in acc] == ["pi-gcn", "mb-gcn", "majority"]
    for r in acc:
        counts = [int(v) for k, v in r.items() if k != "model"]
        assert counts == sorted(counts, reverse=True)
    branch = read_rows(run / "branch_results.csv")
    assert all(float(r["relpcost_gap"]) >= 0 and float(r["learned_gap"]) >= 0 for r in branch)
    assert "top1_agreement_pct" in branch[0]
    joint = read_rows(run / "joint_results.csv")
    assert all(math.isfinite(float(r["dive_branch_cost"])) for r in joint)
    sizes = read_rows(run / "graph_sizes.csv")
    system = json.loads((run / "system.json").read_text())
    for r in sizes:
        assert int(r["pi_nodes"]) == len(system["buses"]) == int(r["n_buses"])
        assert int(r["bipartite_nodes"]) == int(r["milp_rows"]) + int(r["milp_cols"])
        assert float(r["ratio"]) >= 10
    assert (run / "plots" / "fig_training_curves.csv").exists()


def test_timelines_are_best_so_far(small_run):
    run, _ = small_run
    for name in ("dive_timelines.csv", "joint_timelines.csv"):
        series = {}
        for r in read_rows(run / name):
            series.setdefault((r["instance"], r["method"]), []).append(float(r["objective"]))
        for objs in series.values():
            assert objs == sorted(objs, reverse=True)


def test_reported_costs_reprice(small_run):
    from neuralmip.pipeline import stages
    from neuralmip.power import validate_schedule
    from neuralmip.power.ucmodel import build_uc_milp, encode_schedule, schedule_cost

    run, _ = small_run
    cfg = ExperimentConfig(**{**SMALL, "out_dir": str(run)})
    recs = {r.id: r for r in stages.instances(cfg)}
    for s in load_diving_dataset(run / "dive_dataset.jsonl"):
        inst = recs[s.id].instance
        assert validate_schedule(inst, s.schedule).ok
        problem, vmap = build_uc_milp(inst)
        assert problem.c @ encode_schedule(s.schedule, vmap) == pytest.approx(s.objective, abs=1e-6)
        assert schedule_cost(s.schedule, vmap.cu1, vmap.cb1) == pytest.approx(s.objective, abs=1e-6)
    ids = {split: {r.id for r in recs.values() if r.split == split}
           for split in ("train", "valid", "test")}
    assert not (ids["train"] & ids["valid"] or ids["valid"] & ids["test"]
                or ids["train"] & ids["test"])
