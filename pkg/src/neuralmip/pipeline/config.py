"""Experiment configuration with desk-scale defaults."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from ..bnb.solver import BnbConfig
from ..diving import DEFAULT_RATIOS, DivingConfig
from ..nn.models import ModelConfig
from ..nn.optim import TrainConfig


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


def _dive_train() -> dict:
    return {"epochs": 150, "patience": 50, "early_stop": 100, "learning_rate": 0.001}


def _branch_train() -> dict:
    return {"epochs": 60, "patience": 15, "early_stop": 30, "epoch_size": 240}


@dataclass
class ExperimentConfig:
    # system and scenarios
    system_file: str | None = None
    system_seed: int = 0
    horizon: int = 12
    n_train: int = 60
    n_valid: int = 20
    n_test: int = 20
    peak_range: tuple[float, float] = (200.0, 430.0)
    noise_sigma: float = 0.05
    reserve_fraction: float = 0.03
    # per-solve budget; "work" makes timings a deterministic function of simplex iterations
    time_limit: float = 10.0
    node_limit: int | None = 2000
    clock: str = "work"
    # branching data and evaluation
    branch_node_cap: int = 16
    branch_train_instances: int | None = None
    branch_eval_nodes: int = 40
    # models, training, diving
    pi_model: dict = field(default_factory=dict)
    mb_model: dict = field(default_factory=dict)
    dive_train: dict = field(default_factory=_dive_train)
    branch_train: dict = field(default_factory=_branch_train)
    epsilon: float = 0.95
    ratios: tuple[float, ...] = DEFAULT_RATIOS
    workers: int = 1
    out_dir: str = "runs/desk"
    seed: int = 0

    def __post_init__(self):
        self.peak_range = tuple(float(v) for v in self.peak_range)
        self.ratios = tuple(float(r) for r in self.ratios)
        problems = []
        if min(self.n_train, self.n_valid, self.n_test) < 1:
            problems.append("every split needs at least one instance")
        if len(self.peak_range) != 2 or not 0 < self.peak_range[0] <= self.peak_range[1]:
            problems.append("peak_range must be (low, high) with 0 < low <= high")
        if not self.time_limit > 0:
            problems.append("time_limit must be positive")
        if self.node_limit is not None and self.node_limit < 0:
            problems.append("node_limit must be non-negative")
        if self.clock not in ("wall", "work"):
            problems.append("clock must be 'wall' or 'work'")
        if self.workers < 1:
            problems.append("workers must be >= 1")
        if self.branch_node_cap < 0 or self.branch_eval_nodes < 1:
            problems.append("branching node counts must be positive")
        if problems:
            raise ConfigError("; ".join(problems))
        try:
            self.diving_config()
            self.model_config("pi-gcn")
            self.model_config("mb-gcn")
            self.train_config("dive")
            self.train_config("branch")
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    # derived configs -------------------------------------------------------

    def solver_config(self, **overrides) -> BnbConfig:
        base = dict(time_limit=self.time_limit, node_limit=self.node_limit, clock=self.clock,
                    seed=self.seed)
        base.update(overrides)
        return BnbConfig(**base)

    def diving_config(self, **solver_overrides) -> DivingConfig:
        return DivingConfig(epsilon=self.epsilon, ratios=self.ratios,
                            sub_solver=self.solver_config(**solver_overrides), workers=self.workers)

    def model_config(self, kind: str) -> ModelConfig:
        extra = self.pi_model if kind == "pi-gcn" else self.mb_model
        return ModelConfig(**{"kind": kind, "horizon": self.horizon, "seed": self.seed, **extra})

    def train_config(self, task: str) -> TrainConfig:
        extra = self.dive_train if task == "dive" else self.branch_train
        return TrainConfig(**{"seed": self.seed, **extra})

    @property
    def out(self) -> Path:
        return Path(self.out_dir)

    # persistence -----------------------------------------------------------

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        d = dict(d)
        if d.get("time_limit") is None and "time_limit" in d:
            d["time_limit"] = math.inf
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
        return cls.from_dict(raw)

    def dumps(self) -> str:
        d = self.to_dict()
        if not math.isfinite(d["time_limit"]):
            d["time_limit"] = None
        return json.dumps(d, sort_keys=True, indent=2)
