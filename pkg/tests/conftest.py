import numpy as np
import pytest
from hypothesis import settings

from beamtrain.geometry import ArrayGeometry

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

LAMBDA = 3e-3


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def geom512():
    return ArrayGeometry.half_wavelength(512, LAMBDA)


@pytest.fixture(scope="session")
def geom64():
    return ArrayGeometry.half_wavelength(64, LAMBDA)


@pytest.fixture(scope="session")
def geom32():
    return ArrayGeometry.half_wavelength(32, LAMBDA)


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


# one line per acceptance criterion, echoed after the run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
