"""Comparison localizers: RSS-ranging multilateration and a supervised fingerprint classifier."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .env import Normalization
from .grid import CellIndex, Gateway, GridMap, Position, gateway_positions
from .neural import Mlp, SgdConfig, cross_entropy_and_grad, init_parameters, sgd_update, softmax
from .radio import DEFAULT_FLOOR_DBM, PathLossParams


class InsufficientGateways(ValueError):
    pass


class DegenerateGeometry(ValueError):
    pass


@dataclass(frozen=True)
class MlatConfig:
    params: PathLossParams = PathLossParams(2.0, -50.0)
    min_gateways: int = 3
    rss_floor: float = DEFAULT_FLOOR_DBM
    max_iter: int = 50
    tol: float = 1e-6
    damping: float = 1e-3
    # ranges below the path-loss reference distance are clamped to it
    d_min: float = 1.0

    def __post_init__(self):
        if self.min_gateways < 3:
            raise ValueError("multilateration needs min_gateways >= 3")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")


def multilaterate(v: np.ndarray, gws: Sequence[Gateway], cfg: MlatConfig = MlatConfig()) -> Position:
    """Position from RSS ranges by damped Gauss-Newton.

    Starts at the centroid of the usable gateways weighted by linear-domain
    power. Raises InsufficientGateways or DegenerateGeometry.
    """
    v = np.asarray(v, dtype=np.float64)
    usable = ~np.isnan(v) & (v > cfg.rss_floor)
    if usable.sum() < cfg.min_gateways:
        raise InsufficientGateways(f"insufficient gateways: {int(usable.sum())} usable, need {cfg.min_gateways}")
    gw_xy = np.ascontiguousarray(gateway_positions(gws)[usable])
    rss = v[usable]
    dists = 10.0 ** ((rss - cfg.params.b) / (-10.0 * cfg.params.n))
    w = 10.0 ** ((rss - rss.max()) / 10.0)
    x0, y0 = (w[:, None] * gw_xy).sum(axis=0) / w.sum()
    x, y, _, status = kernels.gauss_newton(gw_xy, dists, x0, y0, cfg.max_iter, cfg.tol, cfg.damping, cfg.d_min)
    if status != kernels.GN_OK:
        raise DegenerateGeometry("degenerate geometry")
    return Position(x, y)


def range_residual(p, v: np.ndarray, gws: Sequence[Gateway], cfg: MlatConfig = MlatConfig()) -> float:
    """Sum of squared range errors at ``p`` under the solver's clamped range model."""
    v = np.asarray(v, dtype=np.float64)
    usable = ~np.isnan(v) & (v > cfg.rss_floor)
    gw_xy = gateway_positions(gws)[usable]
    dists = 10.0 ** ((v[usable] - cfg.params.b) / (-10.0 * cfg.params.n))
    rng = np.maximum(np.linalg.norm(gw_xy - np.asarray(p), axis=1), cfg.d_min)
    return float(((rng - dists) ** 2).sum())


def initial_guess(v: np.ndarray, gws: Sequence[Gateway], cfg: MlatConfig = MlatConfig()) -> Position:
    v = np.asarray(v, dtype=np.float64)
    usable = ~np.isnan(v) & (v > cfg.rss_floor)
    gw_xy = gateway_positions(gws)[usable]
    w = 10.0 ** ((v[usable] - v[usable].max()) / 10.0)
    x, y = (w[:, None] * gw_xy).sum(axis=0) / w.sum()
    return Position(x, y)


@dataclass(frozen=True)
class FingerprintTrainingConfig:
    learning_rate: float = 0.001
    minibatch: int = 200
    epochs: int = 30
    hidden: int = 200
    holdout: float = 0.1


@dataclass
class FingerprintModel:
    net: Mlp
    rows: int
    cols: int
    norm: Normalization = field(default_factory=Normalization)
    report: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.net.output_dim != self.rows * self.cols:
            raise ValueError(f"classifier width {self.net.output_dim} != {self.rows}x{self.cols} cells")

    def features(self, rss: np.ndarray) -> np.ndarray:
        rss = np.asarray(rss, dtype=np.float64)
        f = np.clip((rss - self.norm.rss_min) / (self.norm.rss_max - self.norm.rss_min), 0.0, 1.0)
        return np.where(np.isnan(f), 0.0, f)

    def scores(self, rss: np.ndarray) -> np.ndarray:
        rss = np.atleast_2d(rss)
        if rss.shape[1] != self.net.input_dim:
            raise ValueError(f"RSS length {rss.shape[1]} does not match model input {self.net.input_dim}")
        return self.net.forward(self.features(rss))

    def probabilities(self, rss: np.ndarray) -> np.ndarray:
        return softmax(self.scores(rss))


def cell_from_scores(scores: np.ndarray, cols: int) -> CellIndex:
    """Argmax cell; ties go to the lowest row-major index."""
    k = int(np.argmax(scores))
    return CellIndex(k // cols, k % cols)


def train_fingerprint(
    labeled: Sequence[tuple[np.ndarray, tuple[int, int]]] | tuple[np.ndarray, np.ndarray],
    grid: GridMap,
    cfg: FingerprintTrainingConfig,
    rng: np.random.Generator,
    norm: Normalization = Normalization(),
) -> FingerprintModel:
    """Softmax classifier over grid cells, trained by minibatch SGD.

    ``labeled`` is a list of (rss, cell) pairs or a pair of arrays
    (rss (N, G), cells (N, 2)).
    """
    if isinstance(labeled, tuple) and len(labeled) == 2 and isinstance(labeled[0], np.ndarray) and labeled[0].ndim == 2:
        rss, cells = labeled
    else:
        if len(labeled) == 0:
            raise ValueError("empty training data")
        rss = np.array([np.asarray(v, dtype=np.float64) for v, _ in labeled])
        cells = np.array([tuple(c) for _, c in labeled], dtype=np.int64)
    if len(rss) == 0:
        raise ValueError("empty training data")
    cells = np.asarray(cells, dtype=np.int64)
    if np.any(cells < 0) or np.any(cells[:, 0] >= grid.rows) or np.any(cells[:, 1] >= grid.cols):
        raise ValueError("label outside grid")
    labels = cells[:, 0] * grid.cols + cells[:, 1]
    net = init_parameters([rss.shape[1], cfg.hidden, cfg.hidden, grid.n_cells], rng)
    model = FingerprintModel(net, grid.rows, grid.cols, norm)
    x = model.features(rss)

    order = rng.permutation(len(x))
    n_hold = int(len(x) * cfg.holdout) if len(x) >= 10 else 0
    hold, fit = order[:n_hold], order[n_hold:]
    sgd = SgdConfig(cfg.learning_rate)
    bs = max(2, min(cfg.minibatch, len(fit)))
    losses = []
    for _ in range(cfg.epochs):
        perm = fit[rng.permutation(len(fit))]
        for s in range(0, len(perm), bs):
            idx = perm[s : s + bs]
            if len(idx) < 2:
                continue
            loss, grads = cross_entropy_and_grad(net, x[idx], labels[idx])
            sgd_update(net, grads, sgd)
            losses.append(loss)
    pred = net.forward(x).argmax(axis=1)
    model.report = {
        "train_accuracy": float((pred[fit] == labels[fit]).mean()),
        "holdout_accuracy": float((pred[hold] == labels[hold]).mean()) if n_hold else None,
        "final_loss": losses[-1] if losses else None,
        "updates": len(losses),
    }
    return model


def predict_fingerprint(model: FingerprintModel, v: np.ndarray) -> CellIndex:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != model.net.input_dim:
        raise ValueError(f"RSS length {v.shape} does not match model input {model.net.input_dim}")
    return cell_from_scores(model.scores(v)[0], model.cols)


def predict_fingerprint_many(model: FingerprintModel, rss: np.ndarray) -> np.ndarray:
    """(N, 2) predicted cells for (N, G) readings."""
    k = model.scores(rss).argmax(axis=1)
    return np.column_stack([k // model.cols, k % model.cols])
