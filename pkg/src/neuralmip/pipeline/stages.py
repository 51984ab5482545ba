"""Pipeline stages over a fixed output-directory layout.

Every stage reads its inputs from, and writes its outputs to, ``cfg.out``:

    config.json  system.json  scenarios.jsonl
    dive_dataset.jsonl  branch_dataset.jsonl
    checkpoints/<model>.ckpt  curves/<model>.csv
    dive_results.csv  accuracy_intervals.csv  dive_timelines.csv
    branch_results.csv  branch_summary.csv  branch_gap_time.csv
    joint_results.csv  joint_timelines.csv  graph_sizes.csv  plots/
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from ..nn.checkpoint import load_checkpoint
from ..power.system import SystemSpec
from .config import ExperimentConfig
from .data import (InstanceRecord, by_split, collect_branching_dataset, collect_diving_dataset,
                   generate_scenarios, instances_from_records, load_branching_dataset,
                   load_diving_dataset, load_system, read_jsonl, write_jsonl)
from .evaluation import (Model, evaluate_branching, evaluate_diving, evaluate_joint, plot_data,
                         report_graph_sizes)
from .training import MODEL_KINDS, train

log = logging.getLogger(__name__)


def _out(cfg: ExperimentConfig) -> Path:
    cfg.out.mkdir(parents=True, exist_ok=True)
    return cfg.out


def gen_system(cfg: ExperimentConfig) -> Path:
    path = _out(cfg) / "system.json"
    load_system(cfg).save(path)
    (cfg.out / "config.json").write_text(cfg.dumps())
    return path


def system(cfg: ExperimentConfig) -> SystemSpec:
    path = cfg.out / "system.json"
    if not path.exists():
        gen_system(cfg)
    return SystemSpec.load(path)


def gen_scenarios(cfg: ExperimentConfig) -> Path:
    path = _out(cfg) / "scenarios.jsonl"
    write_jsonl(path, generate_scenarios(cfg, system(cfg)))
    return path


def instances(cfg: ExperimentConfig, split: str | None = None) -> list[InstanceRecord]:
    path = cfg.out / "scenarios.jsonl"
    if not path.exists():
        gen_scenarios(cfg)
    recs = read_jsonl(path)
    if split is not None:
        recs = by_split(recs, split)
    return instances_from_records(system(cfg), recs)


def collect_dive(cfg: ExperimentConfig) -> int:
    return collect_diving_dataset(instances(cfg), cfg.solver_config(),
                                  _out(cfg) / "dive_dataset.jsonl", cfg.workers)


def branch_instances(cfg: ExperimentConfig) -> list[InstanceRecord]:
    train_recs = instances(cfg, "train")
    if cfg.branch_train_instances is not None:
        train_recs = train_recs[:cfg.branch_train_instances]
    return train_recs + instances(cfg, "valid") + instances(cfg, "test")


def collect_branch(cfg: ExperimentConfig) -> int:
    return collect_branching_dataset(branch_instances(cfg), cfg.branch_node_cap,
                                     cfg.solver_config(), _out(cfg) / "branch_dataset.jsonl",
                                     cfg.workers)


def checkpoint_path(cfg: ExperimentConfig, kind: str) -> Path:
    return cfg.out / "checkpoints" / f"{kind}.ckpt"


def train_model(cfg: ExperimentConfig, kind: str):
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model {kind!r}; choose from {', '.join(MODEL_KINDS)}")
    if kind == "mb-gcn-branch":
        samples = load_branching_dataset(cfg.out / "branch_dataset.jsonl")
        tcfg = cfg.train_config("branch")
    else:
        samples = load_diving_dataset(cfg.out / "dive_dataset.jsonl")
        tcfg = cfg.train_config("dive")
    mcfg = cfg.model_config("pi-gcn" if kind.startswith("pi") else "mb-gcn")
    if kind == "pi-gcn-dive" and not {"load_shift", "load_scale"} & set(cfg.pi_model):
        # standardize with the training loads so scenario differences are O(1) at the input
        loads = np.concatenate([s.st.node_features.ravel() for s in samples if s.split == "train"])
        mcfg.load_shift, mcfg.load_scale = float(loads.mean()), float(loads.std()) or 1.0
    result = train(samples, kind, tcfg, mcfg)
    (cfg.out / "checkpoints").mkdir(parents=True, exist_ok=True)
    result.save(checkpoint_path(cfg, kind), cfg.out / "curves" / f"{kind}.csv")
    log.info("%s: best epoch %d of %d", kind, result.best_epoch, len(result.curves))
    return result


def load_model(cfg: ExperimentConfig, kind: str) -> Model:
    return Model(*load_checkpoint(checkpoint_path(cfg, kind)))


def eval_dive(cfg: ExperimentConfig) -> dict:
    samples = [s for s in load_diving_dataset(cfg.out / "dive_dataset.jsonl") if s.split == "test"]
    return evaluate_diving(instances(cfg, "test"), samples, load_model(cfg, "pi-gcn-dive"),
                           load_model(cfg, "mb-gcn-dive"), cfg, cfg.out)


def eval_branch(cfg: ExperimentConfig) -> dict:
    heldout = [s for s in load_branching_dataset(cfg.out / "branch_dataset.jsonl")
               if s.split == "test"]
    return evaluate_branching(instances(cfg, "test"), load_model(cfg, "mb-gcn-branch"), cfg,
                              cfg.out, heldout)


def eval_joint(cfg: ExperimentConfig) -> dict:
    return evaluate_joint(instances(cfg, "test"), load_model(cfg, "pi-gcn-dive"),
                          load_model(cfg, "mb-gcn-branch"), cfg, cfg.out)


def graph_sizes_stage(cfg: ExperimentConfig) -> list[dict]:
    return report_graph_sizes(instances(cfg), _out(cfg) / "graph_sizes.csv")


def plot_data_stage(cfg: ExperimentConfig) -> list[Path]:
    return plot_data(cfg.out)


def run_all(cfg: ExperimentConfig) -> dict:
    """Every stage in order; returns the evaluation summaries."""
    gen_system(cfg)
    gen_scenarios(cfg)
    collect_dive(cfg)
    collect_branch(cfg)
    for kind in MODEL_KINDS:
        train_model(cfg, kind)
    summary = {"dive": eval_dive(cfg), "branch": eval_branch(cfg), "joint": eval_joint(cfg)}
    graph_sizes_stage(cfg)
    plot_data_stage(cfg)
    return summary
