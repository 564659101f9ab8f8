import numpy as np
import pytest

from firstclick.grid import SpatialGrid, WaveFunction, norm_squared
from firstclick.scenarios import run_scenario, scenario_fig1, scenario_fig2, scenario_fig3
from firstclick.wavepackets import GaussianSpec


@pytest.fixture(scope="session")
def fig1_grid():
    return SpatialGrid(-60.0, 120.0, 8192)


@pytest.fixture(scope="session")
def fig1_spec():
    return GaussianSpec(5.0, 7.0, 1.0)


@pytest.fixture(scope="session")
def small_grid():
    return SpatialGrid(-20.0, 20.0, 128)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_state(grid, rng):
    amps = rng.standard_normal(grid.n_points) + 1j * rng.standard_normal(grid.n_points)
    psi = WaveFunction(grid, amps)
    return psi.scaled(1.0 / np.sqrt(norm_squared(psi)))


@pytest.fixture(scope="session")
def fig1_report():
    return run_scenario(scenario_fig1())


@pytest.fixture(scope="session")
def fig2_report():
    return run_scenario(scenario_fig2())


@pytest.fixture(scope="session")
def fig3_report():
    return run_scenario(scenario_fig3())


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def record_criterion(number, title, passed, detail):
    line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
