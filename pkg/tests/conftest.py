import numpy as np
import pytest

from blindofdm import kernels


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def _backends():
    out = [pytest.param(kernels.python_backend, id="python")]
    if kernels.compiled_backend is not None:
        out.append(pytest.param(kernels.compiled_backend, id="cython"))
    return out


@pytest.fixture(params=_backends())
def backend(request):
    return request.param


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


ACCEPTANCE = {}


def record(criterion, passed, detail):
    """Log one acceptance line; the summary hook prints them after the run."""
    line = f"{criterion}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE[criterion] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[key])
