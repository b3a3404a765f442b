import csv
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from drloc.grid import GridMap
from drloc.metrics import (
    ErrorStats,
    cdf,
    compare,
    error_series,
    percent_smaller,
    read_stats_json,
    stats,
    write_cdf_csv,
    write_cdf_dat,
    write_stats_json,
)

errors = st.lists(st.floats(0, 1e4, allow_nan=False), min_size=1, max_size=200)


def test_error_series_basic():
    g = GridMap(4, 4, 5.0)
    assert error_series([(1, 1)], [(1, 1)], g).tolist() == [0.0]
    assert error_series([(0, 1)], [(0, 0)], g).tolist() == [5.0]
    assert error_series([(1, 1)], [(0, 0)], g)[0] == pytest.approx(7.0711, abs=1e-4)
    with pytest.raises(ValueError):
        error_series([(0, 0)], [], g)


def test_stats_examples():
    assert stats([5, 5, 5]) == ErrorStats(5.0, 5.0, 5.0, 5.0, 3)
    s = stats([3, 4])
    assert s.mean == 3.5 and s.rms == pytest.approx(math.sqrt(12.5))
    with pytest.raises(ValueError):
        stats([])
    with pytest.raises(ValueError):
        stats([1.0, -1.0])


def test_linear_quantiles():
    s = stats(np.arange(11.0))
    assert s.q80 == pytest.approx(8.0) and s.q95 == pytest.approx(9.5)


@given(errors)
def test_stats_invariants(xs):
    s = stats(xs)
    assert s.mean <= s.rms
    assert min(xs) <= s.q80 <= s.q95 <= max(xs)


@given(errors, st.randoms(use_true_random=False))
def test_stats_permutation_invariant(xs, r):
    ys = list(xs)
    r.shuffle(ys)
    assert stats(xs) == stats(ys)


@given(errors)
def test_cdf_invariants(xs):
    v, f = cdf(xs)
    assert np.all(np.diff(v) > 0) and np.all(np.diff(f) > 0)
    assert f[-1] == 1.0


def test_cdf_examples():
    v, f = cdf([1, 2, 3])
    np.testing.assert_allclose(f, [1 / 3, 2 / 3, 1])
    v, f = cdf([2, 1, 2, 2])
    assert v.tolist() == [1.0, 2.0] and f.tolist() == [0.25, 1.0]


def test_percent_and_compare():
    assert percent_smaller(10, 5) == 50.0
    assert round(percent_smaller(39.1, 24.7), 1) == 36.8
    assert round(percent_smaller(19.4, 12.2), 1) == 37.1
    a = ErrorStats(10, 12.2, 15, 24.7, 5)
    b = ErrorStats(15, 19.4, 25, 39.1, 5)
    r = compare({"drl": a, "mlat": b, "same": a})
    pair = next(p for p in r["pairs"] if p["a"] == "mlat" and p["b"] == "drl")
    assert round(pair["q95_pct_smaller"], 1) == 36.8
    same = next(p for p in r["pairs"] if p["a"] == "drl" and p["b"] == "same")
    assert same["rms_pct_smaller"] == 0.0 and same["q95_pct_smaller"] == 0.0
    assert r["order_by_rms"] == ["drl", "same", "mlat"]
    with pytest.raises(ValueError):
        compare({"x": a})


def test_files(tmp_path):
    xs = [0.0, 5.0, 5.0, 7.5]
    write_stats_json(tmp_path / "s.json", "m", stats(xs), "abc")
    name, st_ = read_stats_json(tmp_path / "s.json")
    assert name == "m" and st_ == stats(xs)
    write_cdf_csv(tmp_path / "c.csv", xs)
    rows = list(csv.reader(open(tmp_path / "c.csv")))
    assert rows[0] == ["error_m", "cum_fraction"]
    assert [float(r[1]) for r in rows[1:]] == [0.25, 0.75, 1.0]
    write_cdf_dat(tmp_path / "c.dat", xs)
    arr = np.loadtxt(tmp_path / "c.dat")
    assert arr.shape == (3, 2)
