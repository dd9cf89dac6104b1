import itertools

import pytest

from necrostab import radial, spectrum

P0 = radial.ModelParams(a=1.0, b=0.25, sigma_hat=0.5)


def grid_params():
    out = []
    for a, sh, f in itertools.product((0.5, 1.0, 2.0), (0.3, 0.5, 0.7), (0.25, 0.5, 0.75)):
        out.append(radial.ModelParams(a=a, b=f * a * sh, sigma_hat=sh))
    return out


GRID = grid_params()


@pytest.fixture(scope="session")
def p0():
    return P0


@pytest.fixture(scope="session")
def stat0():
    return radial.solve_stationary_radius(P0)


@pytest.fixture(scope="session")
def table0(stat0):
    return spectrum.ModeTable.build(stat0, 200)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
