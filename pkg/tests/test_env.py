import numpy as np
import pytest
from hypothesis import given, strategies as st

from drloc.env import (
    AgentState,
    Environment,
    Normalization,
    RewardConfig,
    Simulator,
    compute_reward,
    generate_trajectories,
    generate_trajectory,
    reformulate,
    state_reformulation,
    step,
)
from drloc.grid import ACTION_OFFSETS, Action, ActionLeavesGrid, CellIndex, GridMap, gateway_grid_layout
from drloc.radio import NoiseModel, PathLossParams, build_rss_database

GRID = GridMap(8, 8, 5.0)
GWS = gateway_grid_layout(2, 2, 15.0, 15.0, (12.5, 12.5))


def test_reward_branches(backend):
    cfg = RewardConfig(-64.0, 10.0, 1.0)
    quiet = np.array([-80.0, -90.0, -90.0, -90.0])
    assert compute_reward((2, 2), quiet, GWS, GRID, cfg) == 0.0
    fired = np.array([-55.0, -90.0, -90.0, -90.0])
    # estimate on the gateway cell: clamp to d_min
    assert compute_reward((2, 2), fired, GWS, GRID, cfg) == 1.0
    assert compute_reward((2, 3), fired, GWS, GRID, cfg) == pytest.approx(1 / 5)
    assert compute_reward((2, 7), fired, GWS, GRID, cfg) == pytest.approx(-25.0)


def test_reward_config_validation():
    with pytest.raises(ValueError):
        RewardConfig(-64.0, 1.0, 1.0)
    with pytest.raises(ValueError, match="degenerate normalization"):
        Normalization(-30.0, -30.0)


def test_reformulate_bounds_and_missing():
    phi = reformulate(np.array([7, 0]), np.array([-20.0, -100.0, np.nan, -65.0]), GRID)
    np.testing.assert_allclose(phi, [1.0, 0.0, 1.0, 0.0, 0.0, 0.5])


@given(st.lists(st.one_of(st.floats(-150, 0), st.just(float("nan"))), min_size=4, max_size=4), st.integers(0, 63))
def test_reformulate_in_unit_box(rss, k):
    phi = reformulate(np.array(divmod(k, 8)), np.array(rss), GRID)
    assert phi.shape == (6,)
    assert np.all((phi >= 0) & (phi <= 1))


def test_state_reformulation_matches_batch():
    s = AgentState(CellIndex(3, 4), np.array([-60.0, -70.0, -80.0, -90.0]))
    np.testing.assert_array_equal(state_reformulation(s, GRID), reformulate(np.array([3, 4]), s.rss, GRID))


def test_differential_state_cancels_offset():
    env = Environment(GRID, GWS, differential=True, datum=1)
    cells = np.array([[1, 2], [5, 5]])
    rss = np.array([[-60.0, -70.0, -80.0, -75.5], [-90.0, -65.25, np.nan, -71.0]])
    np.testing.assert_array_equal(env.features(cells, rss), env.features(cells, rss + 8.0))


def test_step_moves_and_rewards():
    env = Environment(GRID, GWS)
    v = np.array([-55.0, -90.0, -90.0, -90.0])
    s, r = step(AgentState(CellIndex(1, 1), v), Action.NE, v, env)
    assert s.estimate == (2, 2)
    assert r == 1.0
    with pytest.raises(ActionLeavesGrid):
        step(AgentState(CellIndex(0, 0), v), Action.SW, v, env)


def test_trajectory_is_valid_walk(rng):
    db = build_rss_database(GRID, GWS, PathLossParams(), NoiseModel(4.0), 10, rng)
    t = generate_trajectory(GRID, db, 300, rng)
    assert t.true_cells.shape == (300, 2) and t.rss_seq.shape == (300, 4)
    d = np.abs(np.diff(t.true_cells, axis=0))
    assert d.max() <= 1
    assert t.true_cells.min() >= 0 and t.true_cells.max() <= 7
    for (r, c), v in zip(t.true_cells, t.rss_seq):
        for g in range(4):
            assert v[g] in db.pools[r, c, g]


def test_trajectory_length_one(rng):
    sim = Simulator(GWS, PathLossParams(), NoiseModel(0.0))
    t = generate_trajectory(GRID, sim, 1, rng)
    assert len(t) == 1


def test_trajectories_deterministic_and_independent():
    sim = Simulator(GWS, PathLossParams(), NoiseModel(4.0))
    a = generate_trajectories(GRID, sim, 3, 20, seed=9)
    b = generate_trajectories(GRID, sim, 3, 20, seed=9)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.true_cells, y.true_cells)
        np.testing.assert_array_equal(x.rss_seq, y.rss_seq)
    assert len({t.seed for t in a}) == 3


def test_walk_uses_all_actions_uniformly(rng):
    # interior cell of a big grid: 9 available actions with equal probability
    sim = Simulator(gateway_grid_layout(1, 1, 1, 1, (0, 0)), PathLossParams(), NoiseModel(0.0))
    g = GridMap(200, 200, 1.0)
    counts = np.zeros(9)
    for _ in range(20):
        t = generate_trajectory(g, sim, 400, rng)
        for d in np.diff(t.true_cells, axis=0):
            counts[[i for i, o in enumerate(ACTION_OFFSETS) if tuple(o) == tuple(d)][0]] += 1
    p = counts / counts.sum()
    assert np.all(np.abs(p - 1 / 9) < 0.02)


def test_reward_worked_values():
    grid = GridMap(1, 10, 5.0)
    gw = gateway_grid_layout(1, 1, 1.0, 1.0, (2.5, 2.5))
    cfg = RewardConfig(-64.0, 10.0, 1.0)
    v = np.array([-55.0])
    assert compute_reward((0, 1), v, gw, grid, cfg) == pytest.approx(0.2)
    assert compute_reward((0, 4), v, gw, grid, cfg) == pytest.approx(-20.0)
    assert compute_reward((0, 0), v, gw, grid, cfg) == 1.0


@given(st.integers(0, 9), st.floats(-90, -40))
def test_reward_range_and_sign(k, rss):
    grid = GridMap(1, 10, 3.0)
    gw = gateway_grid_layout(1, 1, 1.0, 1.0, (1.5, 1.5))
    cfg = RewardConfig(-64.0, 10.0, 1.0)
    r = compute_reward((0, k), np.array([rss]), gw, grid, cfg)
    d = 3.0 * k
    if rss <= -64.0:
        assert r == 0.0
    elif d <= 10.0:
        assert 0 < r <= 1.0
    else:
        assert r < -10.0


def test_reformulation_worked_values():
    big = GridMap(16, 28, 5.0)
    np.testing.assert_allclose(reformulate(np.array([8, 14]), np.array([-65.0]), big), [8 / 15, 14 / 27, 0.5])
    assert np.all(reformulate(np.array([0, 0]), np.full(4, -100.0), GRID) == 0)
    assert np.all(reformulate(np.array([7, 7]), np.full(4, -30.0), GRID) == 1)


@given(st.integers(0, 62), st.lists(st.floats(-110, -20), min_size=4, max_size=4), st.integers(0, 3), st.floats(0, 10))
def test_reformulation_monotone(k, rss, g, bump):
    cell = np.array(divmod(k, 8))
    a = reformulate(cell, np.array(rss), GRID)
    r2 = np.array(rss)
    r2[g] += bump
    assert np.all(reformulate(cell, r2, GRID) >= a)
    c2 = cell + np.array([1 if cell[0] < 7 else 0, 0])
    assert np.all(reformulate(c2, np.array(rss), GRID) >= a)


def test_step_worked_values():
    env = Environment(GRID, GWS)
    quiet = np.full(4, -90.0)
    loud = np.full(4, -60.0)
    s, r = step(AgentState(CellIndex(3, 3), loud), Action.STAY, quiet, env)
    assert s.estimate == (3, 3) and s.rss is quiet and r == 0.0
    s, _ = step(AgentState(CellIndex(0, 0), quiet), Action.NE, quiet, env)
    assert s.estimate == (1, 1)
