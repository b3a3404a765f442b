import numpy as np
import pytest

from drloc import kernels


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    """Run a test once per kernel backend, restoring the default afterwards."""
    prev = kernels.BACKEND
    kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(prev)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for key in sorted(mod.RESULTS, key=lambda k: int(k.split()[0])):
        ok, detail = mod.RESULTS[key]
        tr.write_line(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")
