"""Command-line entry point: ``neuralmip <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import replace

from ..bnb.policies import make_policy
from ..bnb.solver import solve_bnb
from ..diving import NoSolution
from ..power.ucmodel import build_uc_milp, decode_solution, validate_schedule
from . import stages
from .config import ConfigError, ExperimentConfig
from .data import DatasetError
from .training import MODEL_KINDS

EXIT_OK, EXIT_CONFIG, EXIT_NO_SOLUTION = 0, 2, 3


def _solve(cfg: ExperimentConfig, args) -> int:
    recs = stages.instances(cfg)
    wanted = args.instance or next(r.id for r in recs if r.split == "test")
    match = [r for r in recs if r.id == wanted]
    if not match:
        raise ConfigError(f"no instance named {wanted!r}")
    rec = match[0]
    problem, vmap = build_uc_milp(rec.instance)
    result = solve_bnb(problem, cfg.solver_config(branching=make_policy(args.policy)))
    out = cfg.out / "solves"
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{rec.id}.timeline.csv").write_text(result.timeline_csv())
    payload = {"instance": rec.id, "policy": args.policy, "result": result.to_dict()}
    if result.incumbent is not None:
        sched = decode_solution(result.incumbent, vmap)
        payload["schedule"] = sched.to_dict()
        payload["violations"] = sorted(validate_schedule(rec.instance, sched).families())
    (out / f"{rec.id}.json").write_text(json.dumps(payload, sort_keys=True))
    print(f"{rec.id}: {result.status.value} objective={result.upper_bound} "
          f"gap={result.gap_percent:.4f}% nodes={result.nodes_processed}")
    return EXIT_OK if result.incumbent is not None else EXIT_NO_SOLUTION


def _print(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True, default=str))


COMMANDS = {
    "gen-system": lambda cfg, a: print(stages.gen_system(cfg)),
    "gen-scenarios": lambda cfg, a: print(stages.gen_scenarios(cfg)),
    "solve": _solve,
    "collect-dive": lambda cfg, a: print(f"{stages.collect_dive(cfg)} diving records"),
    "collect-branch": lambda cfg, a: print(f"{stages.collect_branch(cfg)} branching samples"),
    "train": lambda cfg, a: print(f"{a.model}: best epoch "
                                  f"{stages.train_model(cfg, a.model).best_epoch}"),
    "eval-dive": lambda cfg, a: _print(stages.eval_dive(cfg)),
    "eval-branch": lambda cfg, a: _print(stages.eval_branch(cfg)),
    "eval-joint": lambda cfg, a: _print(stages.eval_joint(cfg)),
    "graph-sizes": lambda cfg, a: print(f"{len(stages.graph_sizes_stage(cfg))} instances"),
    "plot-data": lambda cfg, a: [print(p) for p in stages.plot_data_stage(cfg)],
    "run-all": lambda cfg, a: _print(stages.run_all(cfg)),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config JSON")
    common.add_argument("--seed", type=int)
    common.add_argument("--out-dir")
    common.add_argument("--time-limit", type=float, help="per-solve budget in seconds")
    common.add_argument("--node-limit", type=int, help="per-solve node budget")
    common.add_argument("--workers", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="neuralmip", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "solve":
            p.add_argument("--instance", help="instance id (default: first test instance)")
            p.add_argument("--policy", default="relpcost", choices=["sb", "mostfrac", "relpcost"])
        if name == "train":
            p.add_argument("--model", required=True, choices=MODEL_KINDS)
    return parser


def load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    overrides = {}
    for arg, key in (("seed", "seed"), ("out_dir", "out_dir"), ("time_limit", "time_limit"),
                     ("node_limit", "node_limit"), ("workers", "workers")):
        v = getattr(args, arg)
        if v is not None:
            overrides[key] = v
    if overrides.get("time_limit") is not None and not math.isfinite(overrides["time_limit"]):
        raise ConfigError("time limit must be finite")
    try:
        return replace(cfg, **overrides) if overrides else cfg
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        rc = COMMANDS[args.command](cfg, args)
        return rc if isinstance(rc, int) else EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NoSolution, DatasetError) as exc:
        print(f"no solution: {exc}", file=sys.stderr)
        return EXIT_NO_SOLUTION


if __name__ == "__main__":
    sys.exit(main())
