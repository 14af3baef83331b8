import numpy as np
import pytest

from conelab.cone_density import Circular, FullSphere, HalfSpace, PlanarSector, SolidCone


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def circ_cone():
    return SolidCone(3, Circular((0, 0, 1), 0.9))


@pytest.fixture
def sector():
    return SolidCone(2, PlanarSector(2.0))


@pytest.fixture
def half3():
    return SolidCone(3, HalfSpace((0, 0, 1)))


@pytest.fixture
def plane():
    return SolidCone(2, FullSphere())


@pytest.fixture
def space():
    return SolidCone(3, FullSphere())


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS):
            terminalreporter.write_line(line)
