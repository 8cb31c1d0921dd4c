import numpy as np
import pytest

from leakopt.model import ModelParams


@pytest.fixture
def params():
    return ModelParams()


@pytest.fixture
def two_level():
    return ModelParams(coupling_scale=0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_hermitian(rng, n=3, scale=1.0):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (a + a.conj().T) / 2


ACCEPTANCE_LINES = []


def record_criterion(label, passed, detail):
    line = f"{label}: {'PASS' if passed else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
