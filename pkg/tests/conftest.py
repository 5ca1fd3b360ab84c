import math

import numpy as np
import pytest

from suspbridge.cable import CableParams, solve_cable
from suspbridge.dynamics import BridgeParams, build_system
from suspbridge.numerics import make_grid

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def default_params():
    return BridgeParams()


@pytest.fixture(scope="session")
def default_system(default_params):
    return build_system(default_params)


@pytest.fixture(scope="session")
def default_profile(default_system):
    return default_system.profile


@pytest.fixture(scope="session")
def default_basis(default_system):
    return default_system.basis


@pytest.fixture(scope="session")
def small_system():
    """Coarser system for tests that only need qualitative behaviour."""
    return build_system(BridgeParams(n_modes=6), panel_count=64, fd_points=1024)


@pytest.fixture(scope="session")
def spec_example_profile():
    params = CableParams(H0=500.0, m=1.0, load_mass=10.0, g=9.81, L=math.pi, s0=1.0)
    return solve_cable(params, grid=make_grid(math.pi))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
