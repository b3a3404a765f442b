"""Log-distance path loss, synthetic RSS, per-cell sample pools.

RSS vectors are float64 arrays aligned with the gateway list; a missing
reading (below receiver sensitivity) is stored as NaN.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .grid import Gateway, GridMap, gateway_positions

MISSING = np.nan
DEFAULT_FLOOR_DBM = -100.0


@dataclass(frozen=True)
class PathLossParams:
    n: float = 2.0
    b: float = -50.0

    def __post_init__(self):
        if not self.n > 0:
            raise ValueError(f"path-loss exponent must be positive, got {self.n}")
        if not math.isfinite(self.b):
            raise ValueError("reference RSS b must be finite")


@dataclass(frozen=True)
class NoiseModel:
    sigma: float = 4.0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"noise sigma must be >= 0, got {self.sigma}")


@dataclass(frozen=True)
class RssDatabase:
    """Sample pools indexed ``pools[row, col, gw, k]`` (dBm, NaN = missing)."""

    pools: np.ndarray

    def __post_init__(self):
        if self.pools.ndim != 4 or self.pools.shape[3] < 1:
            raise ValueError(f"pools must be (rows, cols, gws, samples>=1), got {self.pools.shape}")
        self.pools.setflags(write=False)

    @property
    def samples_per_pool(self) -> int:
        return self.pools.shape[3]

    @property
    def n_gateways(self) -> int:
        return self.pools.shape[2]


def rss_to_distance(rss: float, p: PathLossParams) -> float:
    """Range in meters implied by ``rss`` under the log-distance model."""
    return 10.0 ** ((rss - p.b) / (-10.0 * p.n))


def distance_to_rss(d, p: PathLossParams):
    d_arr = np.asarray(d, dtype=np.float64)
    if np.any(d_arr <= 0):
        raise ValueError("non-positive distance")
    out = p.b - 10.0 * p.n * np.log10(d_arr)
    return float(out) if out.ndim == 0 else out


def _param_arrays(params, n_gw: int) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(params, PathLossParams):
        return np.full(n_gw, params.n), np.full(n_gw, params.b)
    params = list(params)
    if len(params) != n_gw:
        raise ValueError(f"{len(params)} path-loss parameter sets for {n_gw} gateways")
    return np.array([p.n for p in params]), np.array([p.b for p in params])


def model_rss(points: np.ndarray, gws: Sequence[Gateway], params) -> np.ndarray:
    """Noiseless RSS, shape (..., n_gw), with the 1 m reference clamp."""
    gw_xy = gateway_positions(gws)
    n, b = _param_arrays(params, len(gws))
    d = np.linalg.norm(np.asarray(points, dtype=np.float64)[..., None, :] - gw_xy, axis=-1)
    return b - 10.0 * n * np.log10(np.maximum(d, 1.0))


def simulate_rss(
    pos,
    gws: Sequence[Gateway],
    params,
    noise: NoiseModel,
    rng: np.random.Generator,
    floor: float = DEFAULT_FLOOR_DBM,
) -> np.ndarray:
    """One noisy RSS vector at ``pos``. ``params`` is one set or one per gateway."""
    v = model_rss(np.asarray(pos, dtype=np.float64), gws, params)
    v = v + rng.normal(0.0, noise.sigma, size=len(gws))
    v[v < floor] = MISSING
    return v


def perturbed_params(
    n_gw: int,
    rng: np.random.Generator,
    n_range: tuple[float, float] = (1.8, 2.6),
    b_range: tuple[float, float] = (-55.0, -45.0),
) -> list[PathLossParams]:
    """Per-gateway true parameters drawn uniformly from the given ranges."""
    ns = rng.uniform(*n_range, size=n_gw)
    bs = rng.uniform(*b_range, size=n_gw)
    return [PathLossParams(float(n), float(b)) for n, b in zip(ns, bs)]


def build_rss_database(
    grid: GridMap,
    gws: Sequence[Gateway],
    params,
    noise: NoiseModel,
    samples_per_pool: int,
    rng: np.random.Generator,
    floor: float = DEFAULT_FLOOR_DBM,
) -> RssDatabase:
    if samples_per_pool < 1:
        raise ValueError("samples_per_pool must be >= 1")
    base = model_rss(grid.centers(), gws, params).reshape(grid.rows, grid.cols, len(gws), 1)
    pools = base + rng.normal(0.0, noise.sigma, size=(grid.rows, grid.cols, len(gws), samples_per_pool))
    pools[pools < floor] = MISSING
    return RssDatabase(pools)


def sample_rss_from_db(db: RssDatabase, cell: tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    """One value per gateway, each drawn uniformly from that gateway's pool."""
    if db.samples_per_pool < 1:
        raise ValueError(f"no samples for cell {tuple(cell)}")
    k = rng.integers(0, db.samples_per_pool, size=db.n_gateways)
    return db.pools[cell[0], cell[1], np.arange(db.n_gateways), k].copy()


def differential_rss(v: np.ndarray, datum: int) -> np.ndarray:
    """Entry-wise difference to the datum gateway's reading; missing stays missing."""
    v = np.asarray(v, dtype=np.float64)
    if np.isnan(v[datum]):
        raise ValueError("datum unavailable")
    return v - v[datum]


def detect_near_field(v: np.ndarray, beta_r: float) -> int | None:
    """Index of the strongest gateway reading above ``beta_r``; ties go to the lowest index."""
    i = kernels.near_field(np.asarray(v, dtype=np.float64), float(beta_r))
    return None if i < 0 else int(i)
