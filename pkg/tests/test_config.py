import numpy as np
import pytest
from hypothesis import given, strategies as st

from drloc import config
from drloc.config import ConfigError, derive_seed, desk_scale, from_dict, full_scale, loads


def test_defaults_are_desk_scale():
    c = desk_scale()
    assert (c.grid.rows, c.grid.cols, c.grid.cell_size) == (8, 8, 5.0)
    assert len(c.gateway_list()) == 4
    assert (c.data.train_trajectories, c.data.steps, c.data.test_trajectories) == (500, 100, 50)
    d = c.dqn_config()
    assert (d.replay_capacity, d.replay_start, d.minibatch, d.sync_period, d.gamma) == (10000, 2500, 200, 100, 0.9)


def test_gateways_sit_on_cell_centres():
    c = desk_scale()
    centres = {tuple(p) for p in c.grid_map().centers()}
    assert all(tuple(g.position) in centres for g in c.gateway_list())


def test_full_scale_sizes():
    c = full_scale()
    assert (c.data.train_trajectories, c.data.steps) == (10000, 300)
    assert len(c.gateway_list()) == 20


def test_round_trip():
    c = full_scale(seed=42)
    assert loads(c.to_json()) == c
    assert loads(c.to_json()).to_json() == c.to_json()


@given(st.integers(0, 2**64 - 1), st.integers(1, 20), st.floats(-80, -50), st.booleans())
def test_round_trip_property(seed, rows, beta_r, diff):
    c = from_dict({"seed": seed, "grid": {"rows": rows}, "reward": {"beta_r": beta_r}, "state": {"differential": diff}})
    assert loads(c.to_json()) == c


@pytest.mark.parametrize(
    "doc, field",
    [
        ({"grid": {"rows": 0}}, "grid.rows"),
        ({"grid": {"colz": 3}}, "grid.colz"),
        ({"bogus": 1}, "bogus"),
        ({"format_version": 9}, "format_version"),
        ({"seed": -1}, "seed"),
        ({"state": {"datum_gw": 5}}, "state.datum_gw"),
        ({"reward": {"beta_d": 0.5}}, "reward"),
        ({"dqn": {"minibatch": 5000}}, "dqn"),
        ({"eval": {"initial_cell": [8, 0]}}, "eval.initial_cell"),
    ],
)
def test_field_level_errors(doc, field):
    with pytest.raises(ConfigError) as e:
        from_dict(doc)
    assert e.value.field == field


def test_bad_json():
    with pytest.raises(ConfigError):
        loads("{not json")


def test_seed_derivation_documented_formula():
    ss = np.random.SeedSequence(7, spawn_key=(2,))
    assert derive_seed(7, "train_data") == int(ss.generate_state(1, np.uint64)[0])
    seeds = {derive_seed(7, s) for s in config.STAGES}
    assert len(seeds) == len(config.STAGES)


def test_hash_changes_with_content():
    a, b = desk_scale(1), desk_scale(2)
    assert a.hash() != b.hash() and a.hash() == desk_scale(1).hash()
