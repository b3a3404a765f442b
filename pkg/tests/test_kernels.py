import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from drloc import kernels

BACKENDS = kernels.available_backends()
pytestmark = pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled backend not built")

rss_vec = st.lists(st.one_of(st.floats(-120, -20), st.just(float("nan"))), min_size=1, max_size=12)


def _both(name, *args):
    return [getattr(kernels.get_module(b), name)(*args) for b in BACKENDS]


def test_compiled_is_default():
    assert kernels.BACKEND == "compiled"


@given(rss_vec, st.floats(-90, -40))
def test_near_field_parity(v, beta):
    a, b = _both("near_field", np.array(v), beta)
    assert a == b


@given(rss_vec, st.floats(0, 60), st.floats(0, 60), st.floats(2, 20))
def test_reward_parity(v, x, y, beta_d):
    v = np.array(v)
    gw = np.random.default_rng(len(v)).uniform(0, 60, size=(len(v), 2))
    a, b = _both("reward", x, y, v, gw, -64.0, beta_d, 1.0)
    assert a == b


@given(st.lists(st.floats(-1e3, 1e3), min_size=9, max_size=9), st.lists(st.booleans(), min_size=9, max_size=9))
def test_masked_argmax_parity(q, m):
    q, m = np.array(q), np.array(m)
    if not m.any():
        for b in BACKENDS:
            with pytest.raises(ValueError):
                kernels.get_module(b).masked_argmax(q, m)
        return
    a, b = _both("masked_argmax", q, m)
    assert a == b == int(np.flatnonzero(m)[np.argmax(q[m])])


@given(st.integers(1, 9), st.integers(1, 9), st.integers(0, 10**6), st.integers(1, 200))
def test_random_walk_parity(rows, cols, seed, n):
    r = np.random.default_rng(seed)
    u = r.random(n - 1)
    sr, sc = int(r.integers(rows)), int(r.integers(cols))
    a, b = _both("random_walk", rows, cols, sr, sc, u)
    np.testing.assert_array_equal(a, b)


@settings(deadline=None)
@given(st.integers(0, 10**6), st.integers(3, 8))
def test_gauss_newton_parity(seed, k):
    r = np.random.default_rng(seed)
    gw = r.uniform(0, 100, size=(k, 2))
    d = r.uniform(1, 80, size=k)
    x0, y0 = gw.mean(axis=0)
    a, b = _both("gauss_newton", gw, d, x0, y0, 50, 1e-6, 1e-3, 1.0)
    assert a[2:] == b[2:]
    np.testing.assert_allclose(a[:2], b[:2], rtol=1e-9, atol=1e-9)


def test_use_backend_switches_bindings():
    prev = kernels.BACKEND
    try:
        kernels.use_backend("python")
        assert kernels.BACKEND == "python"
        assert kernels.reward is kernels.get_module("python").reward
        with pytest.raises(ValueError):
            kernels.use_backend("fortran")
    finally:
        kernels.use_backend(prev)
