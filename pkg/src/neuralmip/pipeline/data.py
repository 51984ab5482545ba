"""Scenario generation, instance loading and dataset collection."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ..bnb.policies import StrongBranching, strong_branching_select
from ..bnb.solver import BnbConfig, NodeContext, solve_bnb
from ..graphs import (BipartiteGraph, SpatialGraph, SpatiotemporalGraph, bipartite_from_context,
                      build_bipartite_graph, build_spatial_graph, build_spatiotemporal_graph)
from ..milp.simplex import LpStatus, solve_lp
from ..power.scenarios import base_shape, generate_load_scenarios
from ..power.system import LoadScenario, SystemSpec, UcInstance, desk_system, make_instance
from ..power.ucmodel import (UcSchedule, build_uc_milp, decode_solution, schedule_cost,
                             validate_schedule)
from .config import ExperimentConfig

log = logging.getLogger(__name__)

SPLITS = ("train", "valid", "test")


class DatasetError(RuntimeError):
    pass


def write_jsonl(path: str | Path, records) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with path.open("w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True))
            fh.write("\n")
            n += 1
    return n


def read_jsonl(path: str | Path) -> list[dict]:
    with Path(path).open() as fh:
        return [json.loads(line) for line in fh if line.strip()]


def parallel_map(fn, items, workers: int) -> list:
    """Order-preserving map; threads only when ``workers > 1``."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- system and scenarios ----------------------------------------------------

def load_system(cfg: ExperimentConfig) -> SystemSpec:
    if cfg.system_file:
        return SystemSpec.load(cfg.system_file)
    return desk_system(cfg.system_seed)


def generate_scenarios(cfg: ExperimentConfig, system: SystemSpec) -> list[dict]:
    """One record per instance: id, split, peak and the load scenario.

    Peaks are drawn uniformly from ``cfg.peak_range`` so that commitment
    decisions differ across days.
    """
    rng = np.random.default_rng(cfg.seed)
    sizes = {"train": cfg.n_train, "valid": cfg.n_valid, "test": cfg.n_test}
    total = sum(sizes.values())
    peaks = rng.uniform(*cfg.peak_range, size=total)
    noise_seeds = rng.integers(0, 2**31 - 1, size=total)
    shape = base_shape(cfg.horizon)
    weights = np.asarray(system.bus_weights, dtype=float)
    out, k = [], 0
    for split in SPLITS:
        for i in range(sizes[split]):
            sc = generate_load_scenarios(shape, 1, float(peaks[k]), cfg.reserve_fraction,
                                         cfg.noise_sigma, int(noise_seeds[k]), weights)[0]
            out.append({"id": f"{split}-{i:03d}", "split": split, "peak": float(peaks[k]),
                        "scenario": sc.to_dict()})
            k += 1
    return out


@dataclass
class InstanceRecord:
    id: str
    split: str
    instance: UcInstance


def instances_from_records(system: SystemSpec, records: list[dict]) -> list[InstanceRecord]:
    return [InstanceRecord(r["id"], r["split"],
                           make_instance(system, LoadScenario.from_dict(r["scenario"]), r["id"]))
            for r in records]


def by_split(items, split: str) -> list:
    return [it for it in items if (it["split"] if isinstance(it, dict) else it.split) == split]


# -- diving data ---------------------------------------------------------------

@dataclass
class DivingSample:
    id: str
    split: str
    st: SpatiotemporalGraph
    spatial: SpatialGraph
    bipartite: BipartiteGraph
    x: np.ndarray                  # |G|*T state decisions, generator-major
    objective: float
    schedule: UcSchedule
    x_columns: np.ndarray

    @classmethod
    def from_dict(cls, d: dict) -> "DivingSample":
        g = d["graphs"]
        return cls(d["id"], d["split"], SpatiotemporalGraph.from_dict(g["spatiotemporal"]),
                   SpatialGraph.from_dict(g["spatial"]), BipartiteGraph.from_dict(g["bipartite"]),
                   np.array(d["x"], dtype=int), float(d["objective"]),
                   UcSchedule.from_dict(d["schedule"]), np.array(d["x_columns"], dtype=int))


def _diving_record(rec: InstanceRecord, budget: BnbConfig) -> dict | None:
    problem, vmap = build_uc_milp(rec.instance)
    result = solve_bnb(problem, budget)
    if result.incumbent is None:
        log.warning("instance %s: no incumbent within budget; skipped", rec.id)
        return None
    sched = decode_solution(result.incumbent, vmap)
    report = validate_schedule(rec.instance, sched)
    if not report.ok:
        raise DatasetError(f"instance {rec.id}: incumbent fails validation ({sorted(report.families())})")
    root = solve_lp(problem)
    if root.status is not LpStatus.OPTIMAL:
        raise DatasetError(f"instance {rec.id}: root LP is {root.status.value}")
    return {
        "id": rec.id,
        "split": rec.split,
        "status": result.status.value,
        "nodes": result.nodes_processed,
        "objective": schedule_cost(sched, vmap.cu1, vmap.cb1),
        "x": [int(v) for v in sched.x.ravel()],
        "x_columns": [int(c) for c in vmap.x_columns],
        "schedule": sched.to_dict(),
        "graphs": {
            "spatiotemporal": build_spatiotemporal_graph(rec.instance).to_dict(),
            "spatial": build_spatial_graph(rec.instance).to_dict(),
            "bipartite": build_bipartite_graph(problem, root).to_dict(),
        },
    }


def collect_diving_dataset(instances: list[InstanceRecord], budget: BnbConfig, path: str | Path,
                           workers: int = 1) -> int:
    """Solve each instance and store its best schedule; returns the record count."""
    records = [r for r in parallel_map(lambda rec: _diving_record(rec, budget), instances, workers)
               if r is not None]
    if not records:
        raise DatasetError("no instance produced an incumbent; the diving dataset would be empty")
    return write_jsonl(path, records)


def load_diving_dataset(path: str | Path) -> list[DivingSample]:
    return [DivingSample.from_dict(d) for d in read_jsonl(path)]


# -- branching data ------------------------------------------------------------

@dataclass
class BranchingSample:
    id: str
    split: str
    node: int
    graph: BipartiteGraph
    candidates: np.ndarray
    chosen: int

    @property
    def chosen_pos(self) -> int:
        return int(np.flatnonzero(self.candidates == self.chosen)[0])


def _branching_lines(rec: InstanceRecord, node_cap: int, budget: BnbConfig) -> list[dict]:
    problem, _ = build_uc_milp(rec.instance)
    samples: list[dict] = []
    structure: dict = {}

    def on_node(ctx: NodeContext) -> bool:
        if len(samples) >= node_cap:
            return True
        graph = bipartite_from_context(ctx)
        if not structure:
            structure.update({k: v for k, v in graph.to_dict().items()
                              if k in ("edge_features", "incidence", "binary_columns")})
        samples.append({
            "kind": "sample", "id": rec.id, "split": rec.split, "node": len(samples),
            "cons_features": graph.cons_features.tolist(),
            "var_features": graph.var_features.tolist(),
            "candidates": [int(c) for c in ctx.candidates],
            # child LPs computed here are cached, so the solver's own choice is free
            "chosen": int(strong_branching_select(ctx)),
        })
        return len(samples) >= node_cap

    if node_cap > 0:
        solve_bnb(problem, replace(budget, branching=StrongBranching()), on_node)
    if not samples:
        return []
    return [{"kind": "structure", "id": rec.id, "split": rec.split, **structure}] + samples


def collect_branching_dataset(instances: list[InstanceRecord], node_cap: int, budget: BnbConfig,
                              path: str | Path, workers: int = 1) -> int:
    """Record strong-branching decisions at up to ``node_cap`` nodes per instance.

    The static part of each instance's bipartite graph (incidence, edge
    coefficients, binary columns) is written once as a ``structure`` line;
    every ``sample`` line holds the node-level features, the candidates and
    the chosen column.  Returns the number of samples.
    """
    chunks = parallel_map(lambda rec: _branching_lines(rec, node_cap, budget), instances, workers)
    lines = [line for chunk in chunks for line in chunk]
    write_jsonl(path, lines)
    return sum(line["kind"] == "sample" for line in lines)


def load_branching_dataset(path: str | Path) -> list[BranchingSample]:
    structures: dict[str, dict] = {}
    out = []
    for d in read_jsonl(path):
        if d["kind"] == "structure":
            structures[d["id"]] = d
            continue
        s = structures[d["id"]]
        graph = BipartiteGraph.from_dict({**s, "cons_features": d["cons_features"],
                                          "var_features": d["var_features"]})
        out.append(BranchingSample(d["id"], d["split"], d["node"], graph,
                                   np.array(d["candidates"], dtype=int), int(d["chosen"])))
    return out
