import numpy as np
import pytest

from lamina.base_dynamics import make_base
from lamina.graph_transform import LeafSetup
from lamina.skew_core import SkewProduct, TrigFiberFamily, make_standard_perturbation

ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, passed: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def solenoid():
    return make_base("solenoid")


@pytest.fixture(scope="session")
def torus():
    return make_base("anosov")


@pytest.fixture(scope="session")
def skew(solenoid):
    return SkewProduct(solenoid, TrigFiberFamily())


@pytest.fixture(scope="session")
def torus_skew(torus):
    return SkewProduct(torus, TrigFiberFamily())


@pytest.fixture(scope="session")
def G3(skew):
    """The standard perturbation with rho close to 1e-3."""
    return make_standard_perturbation(skew, 1e-3, seed=0)


@pytest.fixture(scope="session")
def small_setup(G3):
    return LeafSetup(G3, n_x=3, n_m=32)


@pytest.fixture(scope="session")
def setup(G3):
    return LeafSetup(G3, n_x=5, n_m=64)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
