import numpy as np
import pytest

from martensite1d import tensor_core as tc
from martensite1d.config import default_config, make_model
from martensite1d.grid import Grid1D
from martensite1d.material import DoubleWell, MaterialParams

# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (int(k.rstrip("ab")), k)):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture
def iso():
    return tc.ElasticityTensor.isotropic(1.0, 1.0)


@pytest.fixture
def params(iso):
    return MaterialParams(c=1.0, nu=1e-3, kappa=0.05, misfit=tc.sym(0.1), D=iso, well=DoubleWell())


@pytest.fixture
def cfg():
    return default_config()


@pytest.fixture
def model(cfg):
    return make_model(cfg)


@pytest.fixture
def grid():
    return Grid1D(0.0, 1.0, 201)


def random_spd(rng, n=6, shift=0.1):
    B = rng.normal(size=(n, n))
    return B @ B.T + shift * np.eye(n)
