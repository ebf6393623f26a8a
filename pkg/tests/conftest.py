import numpy as np
import pytest

from kolmogorov_fk import kernels
from kolmogorov_fk.problem.families import build_family


@pytest.fixture
def heat():
    return build_family("heat", a=1.0, c=1.0)


@pytest.fixture
def const_spec():
    return build_family("constant", K=3.0, c=0.7)


@pytest.fixture(params=sorted(kernels.BACKENDS))
def backend(request):
    prev = kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(prev)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if not mod or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        ok, detail = mod.RESULTS[k]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")
