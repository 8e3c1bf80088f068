import numpy as np
import pytest
from hypothesis import settings

from nvtflow.mesh import StaggeredGrid
from nvtflow.mobility import MobilitySpec
from nvtflow.state import SchemeConfig
from nvtflow.thermo import make_mixture

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def binary():
    return make_mixture(["methane", "pentane"], 310.0)


@pytest.fixture
def ternary():
    return make_mixture(["methane", "pentane", "decane"], 323.0)


def square_droplet(grid, gas, liquid, half=0.25):
    x, y = grid.cell_centers()
    inside = (np.abs(x - grid.lx / 2) < half * grid.lx) & (np.abs(y - grid.ly / 2) < half * grid.ly)
    return np.stack([np.where(inside, l, g) for g, l in zip(gas, liquid)])


@pytest.fixture
def small_binary_case(binary):
    grid = StaggeredGrid(12, 12, 20e-9, 20e-9)
    n = square_droplet(grid, [7430.2, 673.6], [6866.3, 4791.5])
    cfg = SchemeConfig(dt=1e-12, mobility=MobilitySpec.molar_average([[0, 1e-8], [1e-8, 0]]))
    return binary, grid, n, cfg
