"""Training loops for the two diving models and the branching model."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..nn import tensor as T
from ..nn.checkpoint import save_checkpoint
from ..nn.losses import accuracy_per_dim, branching_loss, diving_loss, probabilities
from ..nn.models import (ModelConfig, ParamStore, init_params, mb_gcn_forward, mb_inputs,
                         pi_gcn_forward, pi_inputs)
from ..nn.optim import AdamState, TrainConfig, adam_step
from .data import BranchingSample, DivingSample

MODEL_KINDS = ("pi-gcn-dive", "mb-gcn-dive", "mb-gcn-branch")
CURVE_HEADER = ("epoch", "train_loss", "valid_loss", "valid_acc", "lr")


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainResult:
    params: ParamStore
    config: ModelConfig
    curves: list[tuple[int, float, float, float, float]]
    best_epoch: int
    extra: dict = field(default_factory=dict)

    def curves_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CURVE_HEADER)
        for epoch, tl, vl, va, lr in self.curves:
            w.writerow([epoch, repr(tl), repr(vl), repr(va), repr(lr)])
        return buf.getvalue()

    def save(self, checkpoint_path: str | Path, curves_path: str | Path) -> None:
        for path in (checkpoint_path, curves_path):
            Path(path).parent.mkdir(parents=True, exist_ok=True)
        save_checkpoint(checkpoint_path, self.params, self.config, self.extra)
        Path(curves_path).write_text(self.curves_csv())


# -- per-task adapters -------------------------------------------------------------
# Each adapter turns samples into precomputed inputs and exposes
# loss(params, item) -> Tensor and evaluate(params, items) -> (loss, acc, per-item).

class _DiveTask:
    def __init__(self, kind: str, config: ModelConfig, beta: float, train: list[DivingSample]):
        self.kind, self.config, self.beta = kind, config, beta
        objs = np.array([s.objective for s in train])
        self.normalizer = (float(objs.min()), float(objs.max()))

    def prepare(self, s: DivingSample):
        if self.kind == "pi-gcn-dive":
            return pi_inputs(s.st, s.spatial, self.config), s
        return mb_inputs(s.bipartite), s

    def logits(self, params: ParamStore, item) -> T.Tensor:
        inp, s = item
        if self.kind == "pi-gcn-dive":
            out = pi_gcn_forward(inp, None, params, self.config)
            return T.reshape(out, (out.shape[0] * out.shape[1],))
        return mb_gcn_forward(inp, params, s.x_columns)

    def loss(self, params: ParamStore, item) -> T.Tensor:
        return diving_loss([self.logits(params, item)], item[1].x[None, :], [item[1].objective],
                           self.beta, self.normalizer)

    def evaluate(self, params: ParamStore, items) -> tuple[float, float, np.ndarray]:
        losses, probs, targets = [], [], []
        for item in items:
            y = self.logits(params, item)
            losses.append(diving_loss([y], item[1].x[None, :], [item[1].objective], self.beta,
                                      self.normalizer).item())
            probs.append(probabilities(y))
            targets.append(item[1].x)
        acc = accuracy_per_dim(np.array(probs), np.array(targets))
        return float(np.mean(losses)), float(acc.mean()), acc


class _BranchTask:
    def prepare(self, s: BranchingSample):
        return mb_inputs(s.graph), s

    def logits(self, params: ParamStore, item) -> T.Tensor:
        return mb_gcn_forward(item[0], params, item[1].candidates)

    def loss(self, params: ParamStore, item) -> T.Tensor:
        return branching_loss(self.logits(params, item), item[1].chosen_pos)

    def evaluate(self, params: ParamStore, items) -> tuple[float, float, np.ndarray]:
        losses, hits = [], []
        for item in items:
            y = self.logits(params, item)
            losses.append(branching_loss(y, item[1].chosen_pos).item())
            hits.append(int(np.argmax(y.value)) == item[1].chosen_pos)
        return float(np.mean(losses)), float(np.mean(hits)), np.array(hits, dtype=float)


def majority_labels(samples: list[DivingSample]) -> np.ndarray:
    """Per-dimension majority class of the training labels (ties go to 1)."""
    x = np.array([s.x for s in samples])
    return (x.mean(axis=0) >= 0.5).astype(int)


def train(samples, kind: str, train_cfg: TrainConfig, model_cfg: ModelConfig) -> TrainResult:
    """Adam with lr halving on a plateau and early stopping; keeps the best-validation params.

    Every model is ranked by validation accuracy (mean per-dimension accuracy
    for diving, top-1 agreement with strong branching for branching), with
    validation loss breaking ties.
    """
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}; choose from {MODEL_KINDS}")
    tr = [s for s in samples if s.split == "train"]
    va = [s for s in samples if s.split == "valid"]
    if not tr:
        raise TrainingError("no training samples")
    if not va:
        raise TrainingError("no validation samples")
    is_dive = kind.endswith("-dive")
    task = _DiveTask(kind, model_cfg, train_cfg.beta, tr) if is_dive else _BranchTask()
    tr_items = [task.prepare(s) for s in tr]
    va_items = [task.prepare(s) for s in va]

    params = init_params(model_cfg)
    state = AdamState()
    rng = np.random.default_rng(train_cfg.seed)
    lr = train_cfg.learning_rate
    per_epoch = len(tr_items) if train_cfg.epoch_size is None else min(train_cfg.epoch_size,
                                                                       len(tr_items))
    best_key, best_params, best_epoch, best_dims = None, params.copy(), 0, None
    since, curves = 0, []
    for epoch in range(1, train_cfg.epochs + 1):
        order = rng.permutation(len(tr_items))[:per_epoch]
        total = 0.0
        for i in order:
            params.zero_grad()
            loss = task.loss(params, tr_items[i])
            value = loss.item()
            if not math.isfinite(value):
                raise TrainingError(f"{kind}: non-finite loss {value} at epoch {epoch}, "
                                    f"sample {tr[i].id}; lr={lr}")
            loss.backward()
            adam_step(params, params.grads(), state, lr)
            total += value
        v_loss, v_acc, v_dims = task.evaluate(params, va_items)
        curves.append((epoch, total / per_epoch, v_loss, v_acc, lr))
        key = (v_acc, -v_loss)
        if best_key is None or key > best_key:
            best_key, best_params, best_epoch, best_dims = key, params.copy(), epoch, v_dims
            since = 0
        else:
            since += 1
            if train_cfg.patience and since % train_cfg.patience == 0:
                lr *= 0.5
        if since >= train_cfg.early_stop:
            break

    extra = {"kind": kind, "best_epoch": best_epoch, "train": train_cfg.to_dict()}
    if is_dive:
        extra.update(normalizer=list(task.normalizer), valid_acc=best_dims.tolist(),
                     majority=majority_labels(tr).tolist())
    else:
        extra.update(valid_top1=float(best_dims.mean()))
    return TrainResult(best_params, model_cfg, curves, best_epoch, extra)
