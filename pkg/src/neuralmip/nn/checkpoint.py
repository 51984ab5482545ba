"""Checkpoint files: one JSON header line followed by raw little-endian float64 values."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .models import ModelConfig, ParamStore

FORMAT = "neuralmip-checkpoint"
VERSION = 1


class CheckpointError(ValueError):
    pass


def checkpoint_bytes(params: ParamStore, config: ModelConfig, extra: dict | None = None) -> bytes:
    entries, chunks, offset = [], [], 0
    for name, t in params.items():
        arr = np.ascontiguousarray(t.value, dtype="<f8")
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        offset += arr.size
        chunks.append(arr.tobytes(order="C"))
    header = {"format": FORMAT, "version": VERSION, "config": config.to_dict(),
              "seed": config.seed, "params": entries, "count": offset, "extra": extra or {}}
    return json.dumps(header, sort_keys=True).encode() + b"\n" + b"".join(chunks)


def save_checkpoint(path: str | Path, params: ParamStore, config: ModelConfig,
                    extra: dict | None = None) -> None:
    Path(path).write_bytes(checkpoint_bytes(params, config, extra))


def load_checkpoint(path: str | Path) -> tuple[ParamStore, ModelConfig, dict]:
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise CheckpointError("missing checkpoint header")
    header = json.loads(raw[:nl])
    if header.get("format") != FORMAT or header.get("version") != VERSION:
        raise CheckpointError("unsupported checkpoint format")
    data = np.frombuffer(raw[nl + 1:], dtype="<f8")
    if data.size != header["count"]:
        raise CheckpointError("checkpoint payload size mismatch")
    params = ParamStore()
    for e in header["params"]:
        size = int(np.prod(e["shape"])) if e["shape"] else 1
        params.add(e["name"], data[e["offset"]:e["offset"] + size].reshape(e["shape"]).astype(float))
    return params, ModelConfig.from_dict(header["config"]), header["extra"]
