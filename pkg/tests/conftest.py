import numpy as np
import pytest

from mondeq.equilibrium import SolverOptions, shoot
from mondeq.functionals import AnsatzFunction
from mondeq.interpolation import Family, InterpolationFunction


@pytest.fixture(scope="session")
def sqrt_f():
    return InterpolationFunction(Family.SQRT, 1.0)


@pytest.fixture(scope="session")
def simple_f():
    return InterpolationFunction(Family.SIMPLE, 1.0)


@pytest.fixture(scope="session")
def psi():
    return AnsatzFunction.fluid(1.0, 0.5)


@pytest.fixture(scope="session")
def eq_model(psi, sqrt_f):
    """Psi = rho^2/2 steady state at s = 1 (mass of order one)."""
    return shoot(psi, 1.0, sqrt_f, SolverOptions(resolution=2000))


@pytest.fixture(scope="session")
def kinetic_model(sqrt_f):
    from mondeq.kinetic import lift_kinetic

    return lift_kinetic(AnsatzFunction.kinetic(0.5, 1.0), sqrt_f, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion; printed in the terminal summary."""

    def record(number, title, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'} criterion {number:>2}: {title}: {detail}"
        _ACCEPTANCE_LINES.append((number, line))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
