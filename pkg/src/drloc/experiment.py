"""End-to-end stages shared by the CLI and the acceptance tests."""
from __future__ import annotations

import logging

import numpy as np

from .baselines import (
    DegenerateGeometry,
    FingerprintModel,
    InsufficientGateways,
    initial_guess,
    multilaterate,
    predict_fingerprint_many,
    train_fingerprint,
)
from .config import ExperimentConfig, derive_seed, stage_rng
from .dataset import Dataset
from .dqn import QNetworkPair, TrainingLog, localize_trajectory, train
from .env import generate_trajectories
from .grid import nearest_cell
from .metrics import error_series
from .neural import Mlp, q_network
from .radio import build_rss_database, perturbed_params

log = logging.getLogger(__name__)


def generate_dataset(cfg: ExperimentConfig) -> Dataset:
    grid, gws = cfg.grid_map(), cfg.gateway_list()
    r = cfg.radio
    if r.perturb_n is None and r.perturb_b is None:
        params = [cfg.nominal_params()] * len(gws)
    else:
        params = perturbed_params(
            len(gws),
            stage_rng(cfg.seed, "params"),
            tuple(r.perturb_n or (r.n, r.n)),
            tuple(r.perturb_b or (r.b, r.b)),
        )
    db = build_rss_database(grid, gws, params, cfg.noise(), cfg.data.samples_per_pool, stage_rng(cfg.seed, "pools"), r.floor)
    d = cfg.data
    train_set = generate_trajectories(grid, db, d.train_trajectories, d.steps, derive_seed(cfg.seed, "train_data"))
    test_set = generate_trajectories(grid, db, d.test_trajectories, d.steps, derive_seed(cfg.seed, "test_data"))
    return Dataset(grid, gws, params, r.sigma, r.floor, cfg.seed, db, train_set, test_set)


def check_compatible(cfg: ExperimentConfig, ds: Dataset) -> None:
    """Raise ValueError naming both shapes when the dataset does not fit the config."""
    grid = cfg.grid_map()
    want = (grid.rows, grid.cols, len(cfg.gateway_list()))
    have = (ds.grid.rows, ds.grid.cols, len(ds.gateways))
    if want != have:
        raise ValueError(f"dataset shape (rows, cols, gateways)={have} does not match config {want}")


def train_dqn(cfg: ExperimentConfig, ds: Dataset) -> tuple[QNetworkPair, TrainingLog]:
    check_compatible(cfg, ds)
    env = cfg.environment()
    dcfg = cfg.dqn_config()
    pair = QNetworkPair(q_network(env.n_gw, stage_rng(cfg.seed, "init"), dcfg.hidden))
    return train(ds.train, env, dcfg, stage_rng(cfg.seed, "training"), pair)


def train_fingerprint_model(cfg: ExperimentConfig, ds: Dataset) -> FingerprintModel:
    """Supervised classifier on the training trajectories' (RSS, true cell) pairs."""
    check_compatible(cfg, ds)
    rss = np.concatenate([t.rss_seq for t in ds.train])
    cells = np.concatenate([t.true_cells for t in ds.train])
    return train_fingerprint((rss, cells), ds.grid, cfg.fingerprint_config(), stage_rng(cfg.seed, "fingerprint"), cfg.normalization())


def eval_dqn(cfg: ExperimentConfig, ds: Dataset, net: Mlp) -> np.ndarray:
    env = cfg.environment()
    start = tuple(cfg.eval.initial_cell)
    errs = []
    for t in ds.test:
        est = localize_trajectory(net, t.rss_seq, env, start)
        errs.append(error_series(est, t.true_cells, ds.grid))
    return np.concatenate(errs)


def eval_mlat(cfg: ExperimentConfig, ds: Dataset) -> tuple[np.ndarray, int]:
    """Per-step multilateration errors; unsolvable fixes fall back to the weighted gateway centroid.

    Returns (errors, number of fallbacks). With no usable reading at all the
    fallback is the grid center.
    """
    mcfg = cfg.mlat_config()
    grid = ds.grid
    center = (grid.origin.x + grid.cols * grid.cell_size / 2, grid.origin.y + grid.rows * grid.cell_size / 2)
    errs, fallbacks = [], 0
    for t in ds.test:
        est = []
        for v in t.rss_seq:
            try:
                p = multilaterate(v, ds.gateways, mcfg)
            except (InsufficientGateways, DegenerateGeometry):
                fallbacks += 1
                usable = ~np.isnan(v) & (v > mcfg.rss_floor)
                p = initial_guess(v, ds.gateways, mcfg) if usable.any() else center
            est.append(nearest_cell(grid, p))
        errs.append(error_series(est, t.true_cells, grid))
    return np.concatenate(errs), fallbacks


def eval_fingerprint(cfg: ExperimentConfig, ds: Dataset, model: FingerprintModel) -> np.ndarray:
    errs = []
    for t in ds.test:
        errs.append(error_series(predict_fingerprint_many(model, t.rss_seq), t.true_cells, ds.grid))
    return np.concatenate(errs)
