"""Experiment configuration (a JSON key/value tree) and seed derivation."""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from typing import Any

import numpy as np

from .baselines import FingerprintTrainingConfig, MlatConfig
from .dqn import DqnConfig
from .env import Environment, Normalization, RewardConfig
from .grid import GridMap, Position, gateway_grid_layout
from .radio import NoiseModel, PathLossParams

FORMAT_VERSION = 1

# stage -> counter in the seed derivation
STAGES = {"params": 0, "pools": 1, "train_data": 2, "test_data": 3, "init": 4, "training": 5, "fingerprint": 6}


class ConfigError(ValueError):
    def __init__(self, field_path: str, message: str):
        super().__init__(f"{field_path}: {message}")
        self.field = field_path


def derive_seed(master: int, stage: str) -> int:
    """Stage seed = first 64-bit word of SeedSequence(master, spawn_key=(counter,))."""
    ss = np.random.SeedSequence(master, spawn_key=(STAGES[stage],))
    return int(ss.generate_state(1, np.uint64)[0])


def stage_rng(master: int, stage: str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, stage))


@dataclass
class GridSpec:
    rows: int = 8
    cols: int = 8
    cell_size: float = 5.0
    origin: list = field(default_factory=lambda: [0.0, 0.0])


@dataclass
class GatewaySpec:
    rows: int = 2
    cols: int = 2
    dx: float = 15.0
    dy: float = 15.0
    origin: list = field(default_factory=lambda: [12.5, 12.5])


@dataclass
class RadioSpec:
    n: float = 2.0
    b: float = -50.0
    # per-gateway true parameter ranges; null disables perturbation
    perturb_n: list | None = field(default_factory=lambda: [1.8, 2.6])
    perturb_b: list | None = field(default_factory=lambda: [-55.0, -45.0])
    sigma: float = 4.0
    floor: float = -100.0


@dataclass
class StateSpec:
    differential: bool = False
    datum_gw: int = 1


@dataclass
class DataSpec:
    train_trajectories: int = 500
    test_trajectories: int = 50
    steps: int = 100
    samples_per_pool: int = 200


@dataclass
class MlatSpec:
    n: float = 2.0
    b: float = -50.0
    min_gateways: int = 3
    max_iter: int = 50
    tol: float = 1e-6
    damping: float = 1e-3


@dataclass
class EvalSpec:
    initial_cell: list = field(default_factory=lambda: [0, 0])


@dataclass
class ExperimentConfig:
    seed: int = 0
    grid: GridSpec = field(default_factory=GridSpec)
    gateways: GatewaySpec = field(default_factory=GatewaySpec)
    radio: RadioSpec = field(default_factory=RadioSpec)
    reward: dict = field(default_factory=lambda: asdict(RewardConfig()))
    norm: dict = field(default_factory=lambda: asdict(Normalization()))
    state: StateSpec = field(default_factory=StateSpec)
    data: DataSpec = field(default_factory=DataSpec)
    dqn: dict = field(default_factory=lambda: asdict(DqnConfig()))
    fingerprint: dict = field(default_factory=lambda: asdict(FingerprintTrainingConfig()))
    mlat: MlatSpec = field(default_factory=MlatSpec)
    eval: EvalSpec = field(default_factory=EvalSpec)
    format_version: int = FORMAT_VERSION

    # -- derived objects ----------------------------------------------------

    def grid_map(self) -> GridMap:
        g = self.grid
        return GridMap(g.rows, g.cols, g.cell_size, Position(*g.origin))

    def gateway_list(self):
        g = self.gateways
        return gateway_grid_layout(g.rows, g.cols, g.dx, g.dy, tuple(g.origin))

    def reward_config(self) -> RewardConfig:
        return RewardConfig(**self.reward)

    def normalization(self) -> Normalization:
        return Normalization(**self.norm)

    def noise(self) -> NoiseModel:
        return NoiseModel(self.radio.sigma)

    def nominal_params(self) -> PathLossParams:
        return PathLossParams(self.radio.n, self.radio.b)

    def environment(self) -> Environment:
        return Environment(
            self.grid_map(),
            self.gateway_list(),
            self.reward_config(),
            self.normalization(),
            self.state.differential,
            self.state.datum_gw - 1,
        )

    def dqn_config(self) -> DqnConfig:
        return DqnConfig(**self.dqn)

    def fingerprint_config(self) -> FingerprintTrainingConfig:
        return FingerprintTrainingConfig(**self.fingerprint)

    def mlat_config(self) -> MlatConfig:
        m = self.mlat
        return MlatConfig(PathLossParams(m.n, m.b), m.min_gateways, self.radio.floor, m.max_iter, m.tol, m.damping)

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]

    def validate(self) -> "ExperimentConfig":
        _check(self.grid.rows >= 1 and self.grid.cols >= 1, "grid.rows", "rows and cols must be >= 1")
        _check(self.grid.cell_size > 0, "grid.cell_size", "must be > 0")
        _check(len(self.grid.origin) == 2, "grid.origin", "must be [x, y]")
        _check(self.gateways.rows * self.gateways.cols >= 1, "gateways.rows", "need at least one gateway")
        n_gw = self.gateways.rows * self.gateways.cols
        _check(1 <= self.state.datum_gw <= n_gw, "state.datum_gw", f"must be a gateway id in 1..{n_gw}")
        _check(self.radio.sigma >= 0, "radio.sigma", "must be >= 0")
        _check(self.radio.n > 0, "radio.n", "must be > 0")
        for name in ("perturb_n", "perturb_b"):
            r = getattr(self.radio, name)
            _check(r is None or (len(r) == 2 and r[0] <= r[1]), f"radio.{name}", "must be null or [lo, hi]")
        _check(self.data.steps >= 1, "data.steps", "must be >= 1")
        _check(self.data.train_trajectories >= 1, "data.train_trajectories", "must be >= 1")
        _check(self.data.test_trajectories >= 1, "data.test_trajectories", "must be >= 1")
        _check(self.data.samples_per_pool >= 1, "data.samples_per_pool", "must be >= 1")
        _check(self.mlat.min_gateways >= 3, "mlat.min_gateways", "must be >= 3")
        _check(len(self.eval.initial_cell) == 2, "eval.initial_cell", "must be [row, col]")
        r, c = self.eval.initial_cell
        _check(0 <= r < self.grid.rows and 0 <= c < self.grid.cols, "eval.initial_cell", "outside grid")
        for section, build in (
            ("reward", self.reward_config),
            ("norm", self.normalization),
            ("dqn", self.dqn_config),
            ("fingerprint", self.fingerprint_config),
        ):
            try:
                build()
            except (TypeError, ValueError) as e:
                raise ConfigError(section, str(e)) from None
        return self


def _check(ok: bool, path: str, msg: str) -> None:
    if not ok:
        raise ConfigError(path, msg)


_SECTIONS = {
    "grid": GridSpec,
    "gateways": GatewaySpec,
    "radio": RadioSpec,
    "state": StateSpec,
    "data": DataSpec,
    "mlat": MlatSpec,
    "eval": EvalSpec,
}
_DICT_SECTIONS = {
    "reward": RewardConfig,
    "norm": Normalization,
    "dqn": DqnConfig,
    "fingerprint": FingerprintTrainingConfig,
}


def from_dict(doc: dict[str, Any]) -> ExperimentConfig:
    """Build a validated config; omitted keys take their defaults."""
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    version = doc.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise ConfigError("format_version", f"unsupported version {version}, expected {FORMAT_VERSION}")
    known = {f.name for f in fields(ExperimentConfig)}
    for k in doc:
        if k not in known:
            raise ConfigError(k, "unknown key")
    cfg = ExperimentConfig()
    if "seed" in doc:
        seed = doc["seed"]
        _check(isinstance(seed, int) and not isinstance(seed, bool) and 0 <= seed < 2**64, "seed", "must be an unsigned 64-bit integer")
        cfg.seed = seed
    for name, cls in _SECTIONS.items():
        if name in doc:
            sub = doc[name]
            _check(isinstance(sub, dict), name, "must be an object")
            allowed = {f.name for f in fields(cls)}
            for k in sub:
                _check(k in allowed, f"{name}.{k}", "unknown key")
            base = asdict(getattr(cfg, name))
            base.update(copy.deepcopy(sub))
            setattr(cfg, name, cls(**base))
    for name, cls in _DICT_SECTIONS.items():
        if name in doc:
            sub = doc[name]
            _check(isinstance(sub, dict), name, "must be an object")
            allowed = {f.name for f in fields(cls)}
            for k in sub:
                _check(k in allowed, f"{name}.{k}", "unknown key")
            base = dict(getattr(cfg, name))
            base.update(copy.deepcopy(sub))
            setattr(cfg, name, base)
    return cfg.validate()


def loads(text: str) -> ExperimentConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError("<file>", f"invalid JSON: {e}") from None
    return from_dict(doc)


def load(path) -> ExperimentConfig:
    with open(path) as f:
        return loads(f.read())


def dump(cfg: ExperimentConfig, path) -> None:
    with open(path, "w") as f:
        f.write(cfg.to_json())


def desk_scale(seed: int = 1) -> ExperimentConfig:
    """8x8 grid of 5 m cells, 2x2 gateways, 4 dB shadowing, 500 x 100 training walks.

    The Q-network makes 6 passes over the walks (300k steps); one pass leaves
    it short of converged at this data size.
    """
    cfg = ExperimentConfig(seed=seed)
    cfg.dqn["epochs"] = 6
    return cfg.validate()


def full_scale(seed: int = 1) -> ExperimentConfig:
    """16x28 grid, 4x5 gateways 30 m x 24 m apart, 10,000 x 300 walks, 2,000 samples per pool."""
    return from_dict(
        {
            "seed": seed,
            "grid": {"rows": 16, "cols": 28, "cell_size": 5.0, "origin": [0.0, 0.0]},
            "gateways": {"rows": 4, "cols": 5, "dx": 30.0, "dy": 24.0, "origin": [10.0, 4.0]},
            "data": {"train_trajectories": 10000, "test_trajectories": 100, "steps": 300, "samples_per_pool": 2000},
            "state": {"datum_gw": 8},
        }
    )
