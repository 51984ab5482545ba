"""Power-system data model and its JSON representation."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np


class PowerSystemError(ValueError):
    """Invalid system or scenario data."""


class TopologyError(PowerSystemError):
    pass


@dataclass(frozen=True)
class GeneratorParams:
    id: int
    bus: int
    p_min: float
    p_max: float
    su: float
    sd: float
    ut: int
    dt: int
    ru: float
    rd: float
    cu: tuple[float, ...]
    nd: tuple[int, ...]
    pb: tuple[float, ...]
    cb: tuple[float, ...]
    nl: int
    v0: int
    p0: float
    init_state_periods: int

    def __post_init__(self):
        object.__setattr__(self, "cu", tuple(float(v) for v in self.cu))
        object.__setattr__(self, "nd", tuple(int(v) for v in self.nd))
        object.__setattr__(self, "pb", tuple(float(v) for v in self.pb))
        object.__setattr__(self, "cb", tuple(float(v) for v in self.cb))
        if self.p_min > self.p_max:
            raise PowerSystemError(f"generator {self.id}: p_min > p_max")
        if len(self.pb) != self.nl + 1 or len(self.cb) != self.nl + 1:
            raise PowerSystemError(f"generator {self.id}: breakpoint vectors need nl+1 entries")
        if np.any(np.diff(self.pb) <= 0):
            raise PowerSystemError(f"generator {self.id}: pb must be strictly increasing")
        if not (np.isclose(self.pb[0], self.p_min) and np.isclose(self.pb[-1], self.p_max)):
            raise PowerSystemError(f"generator {self.id}: pb must span [p_min, p_max]")
        if np.any(np.diff(self.cb) < 0):
            raise PowerSystemError(f"generator {self.id}: cb must be non-decreasing")
        if len(self.cu) != len(self.nd) or not self.cu:
            raise PowerSystemError(f"generator {self.id}: cu and nd must have equal, nonzero length")
        if self.ut < 1 or self.dt < 1:
            raise PowerSystemError(f"generator {self.id}: ut, dt must be >= 1")
        if self.su < self.p_min or self.sd < self.p_min:
            raise PowerSystemError(f"generator {self.id}: su, sd must be >= p_min")
        if self.v0 not in (0, 1):
            raise PowerSystemError(f"generator {self.id}: v0 must be 0 or 1")


@dataclass(frozen=True)
class Line:
    id: int
    from_bus: int
    to_bus: int
    reactance: float
    susceptance: float
    f_pos: float
    f_neg: float

    def __post_init__(self):
        if self.from_bus == self.to_bus:
            raise PowerSystemError(f"line {self.id} is a self-loop")
        if self.reactance <= 0:
            raise PowerSystemError(f"line {self.id}: reactance must be positive")
        if not self.f_neg <= 0 <= self.f_pos:
            raise PowerSystemError(f"line {self.id}: need f_neg <= 0 <= f_pos")


@dataclass(frozen=True)
class SystemSpec:
    buses: tuple[int, ...]
    lines: tuple[Line, ...]
    generators: tuple[GeneratorParams, ...]
    slack_bus: int
    bus_weights: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(int(b) for b in self.buses))
        object.__setattr__(self, "lines", tuple(self.lines))
        object.__setattr__(self, "generators", tuple(self.generators))
        if len(set(self.buses)) != len(self.buses):
            raise PowerSystemError("duplicate bus ids")
        known = set(self.buses)
        if self.slack_bus not in known:
            raise PowerSystemError("slack bus not in bus list")
        for ln in self.lines:
            if ln.from_bus not in known or ln.to_bus not in known:
                raise PowerSystemError(f"line {ln.id} references an unknown bus")
        seen = set()
        for g in self.generators:
            if g.bus not in known:
                raise PowerSystemError(f"generator {g.id} on unknown bus {g.bus}")
            if g.bus in seen:
                raise PowerSystemError(f"more than one generator on bus {g.bus}")
            seen.add(g.bus)
        if self.bus_weights is not None:
            w = tuple(float(v) for v in self.bus_weights)
            if len(w) != len(self.buses) or any(v < 0 for v in w):
                raise PowerSystemError("bus_weights must be non-negative, one per bus")
            object.__setattr__(self, "bus_weights", w)
        if not self.is_connected():
            raise TopologyError("system graph is not connected")

    @property
    def n_buses(self) -> int:
        return len(self.buses)

    def bus_index(self, bus: int) -> int:
        return self.buses.index(bus)

    def is_connected(self) -> bool:
        if not self.buses:
            return False
        adj = {b: set() for b in self.buses}
        for ln in self.lines:
            adj[ln.from_bus].add(ln.to_bus)
            adj[ln.to_bus].add(ln.from_bus)
        stack, seen = [self.buses[0]], {self.buses[0]}
        while stack:
            v = stack.pop()
            for w in adj[v] - seen:
                seen.add(w)
                stack.append(w)
        return len(seen) == len(self.buses)

    # -- JSON --------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "buses": list(self.buses),
            "lines": [asdict(ln) for ln in self.lines],
            "generators": [_gen_dict(g) for g in self.generators],
            "slack_bus": self.slack_bus,
            "bus_weights": list(self.bus_weights) if self.bus_weights is not None else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SystemSpec":
        return cls(
            buses=tuple(d["buses"]),
            lines=tuple(Line(**ln) for ln in d["lines"]),
            generators=tuple(GeneratorParams(**g) for g in d["generators"]),
            slack_bus=d["slack_bus"],
            bus_weights=tuple(d["bus_weights"]) if d.get("bus_weights") is not None else None,
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "SystemSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _gen_dict(g: GeneratorParams) -> dict:
    d = asdict(g)
    for key in ("cu", "nd", "pb", "cb"):
        d[key] = list(d[key])
    return d


@dataclass(frozen=True, eq=False)
class LoadScenario:
    d: np.ndarray      # N x T, MW
    r: np.ndarray      # T, MW

    def __post_init__(self):
        d = np.array(self.d, dtype=float, ndmin=2)
        r = np.array(self.r, dtype=float).ravel()
        if d.shape[1] < 1 or r.size != d.shape[1]:
            raise PowerSystemError("scenario shapes inconsistent")
        if np.any(d < 0) or np.any(r < 0):
            raise PowerSystemError("loads and reserve must be non-negative")
        d.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "r", r)

    @property
    def horizon(self) -> int:
        return self.d.shape[1]

    def to_dict(self) -> dict:
        return {"d": self.d.tolist(), "r": self.r.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "LoadScenario":
        return cls(np.array(d["d"], dtype=float), np.array(d["r"], dtype=float))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "LoadScenario":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True, eq=False)
class UcInstance:
    system: SystemSpec
    scenario: LoadScenario
    ptdf_gen: np.ndarray
    ptdf_bus: np.ndarray
    name: str = field(default="instance")

    def __post_init__(self):
        n, m = self.system.n_buses, len(self.system.lines)
        if self.scenario.d.shape[0] != n:
            raise PowerSystemError("scenario bus count does not match the system")
        if self.ptdf_bus.shape != (n, m) or self.ptdf_gen.shape != (len(self.system.generators), m):
            raise PowerSystemError("PTDF shapes inconsistent with the system")

    @property
    def horizon(self) -> int:
        return self.scenario.horizon

    @property
    def generators(self) -> tuple[GeneratorParams, ...]:
        return self.system.generators


def make_instance(system: SystemSpec, scenario: LoadScenario, name: str = "instance") -> UcInstance:
    from .ptdf import compute_ptdf

    ptdf_gen, ptdf_bus = compute_ptdf(system)
    return UcInstance(system, scenario, ptdf_gen, ptdf_bus, name)


# IEEE 9-bus topology (branch reactances in p.u.)
_IEEE9_LINES = (
    (1, 4, 0.0576), (4, 5, 0.0920), (5, 6, 0.1700), (3, 6, 0.0586), (6, 7, 0.1008),
    (7, 8, 0.0720), (8, 2, 0.0625), (8, 9, 0.1610), (9, 4, 0.0850),
)


def desk_system(seed: int = 0) -> SystemSpec:
    """Nine-bus, three-unit test system: base, mid-merit and peaking units."""
    rng = np.random.default_rng(seed)
    lines = tuple(
        Line(id=k, from_bus=f, to_bus=t, reactance=x, susceptance=round(1.0 / x, 6),
             f_pos=cap, f_neg=-cap)
        for k, ((f, t, x), cap) in enumerate(
            zip(_IEEE9_LINES, (250, 120, 100, 250, 120, 120, 250, 120, 120)))
    )
    gens = (
        GeneratorParams(id=0, bus=1, p_min=60.0, p_max=220.0, su=110.0, sd=110.0, ut=4, dt=3,
                        ru=60.0, rd=60.0, cu=(1400.0, 2600.0), nd=(3, 8),
                        pb=(60.0, 120.0, 170.0, 220.0), cb=(900.0, 1560.0, 2160.0, 2810.0), nl=3,
                        v0=1, p0=120.0, init_state_periods=8),
        GeneratorParams(id=1, bus=2, p_min=30.0, p_max=140.0, su=70.0, sd=70.0, ut=3, dt=2,
                        ru=50.0, rd=50.0, cu=(500.0, 900.0), nd=(2, 6),
                        pb=(30.0, 80.0, 140.0), cb=(700.0, 1650.0, 2890.0), nl=2,
                        v0=0, p0=0.0, init_state_periods=6),
        GeneratorParams(id=2, bus=3, p_min=10.0, p_max=100.0, su=60.0, sd=60.0, ut=2, dt=1,
                        ru=70.0, rd=70.0, cu=(150.0, 250.0), nd=(1, 4),
                        pb=(10.0, 50.0, 100.0), cb=(380.0, 1540.0, 3140.0), nl=2,
                        v0=0, p0=0.0, init_state_periods=6),
    )
    weights = rng.uniform(0.5, 1.5, size=9)
    weights = weights / weights.sum()
    return SystemSpec(buses=tuple(range(1, 10)), lines=lines, generators=gens, slack_bus=1,
                      bus_weights=tuple(float(w) for w in weights))
