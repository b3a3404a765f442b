import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from drloc.baselines import (
    DegenerateGeometry,
    FingerprintTrainingConfig,
    InsufficientGateways,
    MlatConfig,
    cell_from_scores,
    initial_guess,
    multilaterate,
    predict_fingerprint,
    range_residual,
    train_fingerprint,
)
from drloc.grid import Gateway, GridMap, Position, gateway_grid_layout
from drloc.radio import PathLossParams, model_rss

NOMINAL = PathLossParams(2.0, -50.0)
SQUARE = [Gateway(i + 1, Position(x, y)) for i, (x, y) in enumerate([(0, 0), (30, 0), (0, 24), (30, 24)])]


def test_square_recovery(backend):
    v = model_rss(np.array([10.0, 12.0]), SQUARE, NOMINAL)
    p = multilaterate(v, SQUARE)
    assert np.hypot(p.x - 10, p.y - 12) < 0.01


def test_agent_on_gateway(backend):
    v = model_rss(np.array([30.0, 0.0]), SQUARE, NOMINAL)
    p = multilaterate(v, SQUARE)
    assert range_residual(p, v, SQUARE) < 1e-6


def test_too_few_gateways():
    v = np.array([-60.0, -65.0, np.nan, -101.0])
    with pytest.raises(InsufficientGateways, match="insufficient gateways"):
        multilaterate(v, SQUARE)


def test_collinear_is_degenerate(backend):
    line = [Gateway(i + 1, Position(10.0 * i, 0.0)) for i in range(3)]
    v = model_rss(np.array([10.0, 5.0]), line, NOMINAL)
    with pytest.raises(DegenerateGeometry, match="degenerate geometry"):
        multilaterate(v, line)


@settings(max_examples=60, deadline=None)
@given(st.floats(1.0, 29.0), st.floats(1.0, 23.0), st.lists(st.floats(-6, 6), min_size=4, max_size=4))
def test_descent_from_initial_guess(x, y, noise):
    v = model_rss(np.array([x, y]), SQUARE, NOMINAL) + np.array(noise)
    p = multilaterate(v, SQUARE)
    assert range_residual(p, v, SQUARE) <= range_residual(initial_guess(v, SQUARE), v, SQUARE) + 1e-12


def test_model_mismatch_stays_finite(rng):
    gws = gateway_grid_layout(4, 5, 30.0, 24.0, (10.0, 4.0))
    for _ in range(30):
        pt = rng.uniform([10, 4], [130, 76])
        v = model_rss(pt, gws, PathLossParams(2.4, -50.0))
        p = multilaterate(v, gws)
        assert np.isfinite(p.x) and np.isfinite(p.y)


def test_mlat_config_validation():
    with pytest.raises(ValueError):
        MlatConfig(min_gateways=2)
    with pytest.raises(ValueError):
        MlatConfig(tol=0.0)


def test_fingerprint_separable(rng):
    grid = GridMap(1, 2, 5.0)
    data = [(np.array([-40.0, -90.0]), (0, 0))] * 40 + [(np.array([-90.0, -40.0]), (0, 1))] * 40
    cfg = FingerprintTrainingConfig(learning_rate=0.05, minibatch=20, epochs=100, hidden=16)
    # enough updates for the 0.99-momentum running statistics to settle
    m = train_fingerprint(data, grid, cfg, rng)
    assert m.report["train_accuracy"] == 1.0
    assert predict_fingerprint(m, np.array([-40.0, -90.0])) == (0, 0)
    assert predict_fingerprint(m, np.array([-90.0, -40.0])) == (0, 1)
    p = m.probabilities(np.array([[-40.0, -90.0], [-60.0, -60.0]]))
    assert np.all(p >= 0)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-9)
    with pytest.raises(ValueError):
        predict_fingerprint(m, np.array([-40.0]))


def test_fingerprint_deterministic_and_errors():
    grid = GridMap(2, 2, 5.0)
    r = np.random.default_rng(0)
    rss = r.uniform(-90, -40, size=(50, 3))
    cells = r.integers(0, 2, size=(50, 2))
    cfg = FingerprintTrainingConfig(epochs=2, hidden=8, minibatch=10)
    a = train_fingerprint((rss, cells), grid, cfg, np.random.default_rng(1))
    b = train_fingerprint((rss, cells), grid, cfg, np.random.default_rng(1))
    for x, y in zip(a.net.params(), b.net.params()):
        np.testing.assert_array_equal(x, y)
    with pytest.raises(ValueError):
        train_fingerprint([], grid, cfg, np.random.default_rng(1))
    with pytest.raises(ValueError):
        train_fingerprint((rss, cells + 5), grid, cfg, np.random.default_rng(1))


def test_argmax_rules():
    s = np.zeros(6)
    s[4] = 10.0
    assert cell_from_scores(s, 3) == (1, 1)
    assert cell_from_scores(np.exp(s) * 3 + 1, 3) == (1, 1)
    tie = np.array([0.0, 2.0, 0.0, 2.0, 0.0, 0.0])
    assert cell_from_scores(tie, 3) == (0, 1)
