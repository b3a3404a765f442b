"""Localization MDP: state features, landmark reward, trajectories, stepping."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import kernels
from .grid import (
    Action,
    CellIndex,
    Gateway,
    GridMap,
    apply_action,
    cell_center,
    gateway_positions,
)
from .radio import DEFAULT_FLOOR_DBM, NoiseModel, RssDatabase, model_rss


@dataclass(frozen=True)
class RewardConfig:
    """Near-field threshold ``beta_r`` (dBm), acceptance distance ``beta_d`` and clamp ``d_min`` (m).

    beta_r = -64 dBm is about 5 m (one cell) under n=2, b=-50.
    """

    beta_r: float = -64.0
    beta_d: float = 10.0
    d_min: float = 1.0

    def __post_init__(self):
        if not (self.beta_d > self.d_min > 0):
            raise ValueError(f"need beta_d > d_min > 0, got beta_d={self.beta_d}, d_min={self.d_min}")


@dataclass(frozen=True)
class Normalization:
    rss_min: float = -100.0
    rss_max: float = -30.0

    def __post_init__(self):
        if not self.rss_max > self.rss_min:
            raise ValueError("degenerate normalization")


class AgentState(NamedTuple):
    estimate: CellIndex
    rss: np.ndarray


class ExperienceTuple(NamedTuple):
    phi_prev: np.ndarray
    action: Action
    reward: float
    phi_next: np.ndarray


@dataclass(frozen=True)
class Simulator:
    """Draws RSS straight from the propagation model at cell centers (no pools)."""

    gws: Sequence[Gateway]
    params: object
    noise: NoiseModel = NoiseModel()
    floor: float = DEFAULT_FLOOR_DBM


@dataclass
class Trajectory:
    true_cells: np.ndarray  # (T, 2) int64
    rss_seq: np.ndarray  # (T, n_gw) float64, NaN = missing
    seed: int = 0

    def __post_init__(self):
        self.true_cells = np.asarray(self.true_cells, dtype=np.int64)
        self.rss_seq = np.asarray(self.rss_seq, dtype=np.float64)
        if len(self.true_cells) < 1 or len(self.true_cells) != len(self.rss_seq):
            raise ValueError("trajectory needs T >= 1 cells and matching RSS rows")

    def __len__(self):
        return len(self.true_cells)


@dataclass
class Environment:
    """Everything the reward and the state features need about the deployment."""

    grid: GridMap
    gws: Sequence[Gateway]
    reward_cfg: RewardConfig = field(default_factory=RewardConfig)
    norm: Normalization = field(default_factory=Normalization)
    differential: bool = False
    datum: int = 0

    def __post_init__(self):
        self.gw_xy = np.ascontiguousarray(gateway_positions(self.gws))
        self.centers = self.grid.centers()

    @property
    def n_gw(self) -> int:
        return len(self.gws)

    @property
    def state_dim(self) -> int:
        return 2 + self.n_gw

    def reward(self, estimate: tuple[int, int], rss: np.ndarray) -> float:
        k = estimate[0] * self.grid.cols + estimate[1]
        c = self.cfg_tuple
        return kernels.reward(self.centers[k, 0], self.centers[k, 1], rss, self.gw_xy, *c)

    @property
    def cfg_tuple(self):
        return (self.reward_cfg.beta_r, self.reward_cfg.beta_d, self.reward_cfg.d_min)

    def features(self, cells: np.ndarray, rss: np.ndarray) -> np.ndarray:
        return reformulate(cells, rss, self.grid, self.norm, self.differential, self.datum)


def reformulate(
    cells: np.ndarray,
    rss: np.ndarray,
    grid: GridMap,
    norm: Normalization = Normalization(),
    differential: bool = False,
    datum: int = 0,
) -> np.ndarray:
    """Batched state reformulation: cells (..., 2), rss (..., n_gw) -> (..., 2 + n_gw) in [0, 1].

    Missing readings map to 0. With ``differential`` the datum reading is
    subtracted first; a missing datum makes every RSS feature 0.
    """
    cells = np.asarray(cells, dtype=np.float64)
    rss = np.asarray(rss, dtype=np.float64)
    if differential:
        rss = rss - rss[..., datum : datum + 1]
    denom = np.array([max(grid.rows - 1, 1), max(grid.cols - 1, 1)], dtype=np.float64)
    pos = cells / denom
    r = np.clip((rss - norm.rss_min) / (norm.rss_max - norm.rss_min), 0.0, 1.0)
    r = np.where(np.isnan(r), 0.0, r)
    return np.concatenate([pos, r], axis=-1)


def compute_reward(
    estimate: tuple[int, int],
    rss: np.ndarray,
    gws: Sequence[Gateway],
    grid: GridMap,
    cfg: RewardConfig,
) -> float:
    """Landmark reward: 1/d near an agreeing gateway, -d when the estimate is too far, else 0."""
    c = cell_center(grid, estimate)
    gw_xy = np.ascontiguousarray(gateway_positions(gws))
    return kernels.reward(c.x, c.y, np.asarray(rss, dtype=np.float64), gw_xy, cfg.beta_r, cfg.beta_d, cfg.d_min)


def state_reformulation(s: AgentState, grid: GridMap, norm: Normalization = Normalization()) -> np.ndarray:
    return reformulate(np.asarray(s.estimate), s.rss, grid, norm)


def step(
    state: AgentState, action: Action | int, next_rss: np.ndarray, env: Environment
) -> tuple[AgentState, float]:
    est = apply_action(env.grid, state.estimate, action)
    return AgentState(est, next_rss), env.reward(est, next_rss)


def generate_trajectory(
    grid: GridMap, source: RssDatabase | Simulator, length: int, rng: np.random.Generator, seed: int = 0
) -> Trajectory:
    """Random walk from a uniform start cell, one uniformly chosen available action per step."""
    if length < 1:
        raise ValueError("trajectory length must be >= 1")
    start = int(rng.integers(0, grid.n_cells))
    u = rng.random(length - 1)
    cells = kernels.random_walk(grid.rows, grid.cols, start // grid.cols, start % grid.cols, u)
    if isinstance(source, RssDatabase):
        g = source.n_gateways
        k = rng.integers(0, source.samples_per_pool, size=(length, g))
        rss = source.pools[cells[:, 0][:, None], cells[:, 1][:, None], np.arange(g)[None, :], k]
    else:
        centers = grid.centers()[cells[:, 0] * grid.cols + cells[:, 1]]
        rss = model_rss(centers, source.gws, source.params)
        rss = rss + rng.normal(0.0, source.noise.sigma, size=rss.shape)
        rss[rss < source.floor] = np.nan
    return Trajectory(cells, np.array(rss, dtype=np.float64), seed)


def trajectory_seeds(seed: int, count: int) -> list[int]:
    """Independent per-trajectory seeds derived from one stage seed."""
    ss = np.random.SeedSequence(seed)
    return [int(c.generate_state(1, np.uint64)[0]) for c in ss.spawn(count)]


def generate_trajectories(
    grid: GridMap, source: RssDatabase | Simulator, count: int, length: int, seed: int
) -> list[Trajectory]:
    return [
        generate_trajectory(grid, source, length, np.random.default_rng(s), seed=s)
        for s in trajectory_seeds(seed, count)
    ]
