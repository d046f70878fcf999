import math

import numpy as np
import pytest

from uavauth.array_channel import (
    AnglePair,
    ArrayGeometry,
    TerminalProfile,
    angles_to_cosines,
    distance_from_height,
)
from uavauth.detector import GcsKnowledge
from uavauth.estimator import GridSpec
from uavauth.signal_model import NoiseParams

SIGMA_SQ = 0.01
HEIGHT = 20.0


def profile_deg(theta, phi, lambda_sq, power=100.0, distance=None):
    ang = AnglePair.from_degrees(theta, phi)
    d = distance if distance is not None else distance_from_height(HEIGHT, ang)
    return TerminalProfile(power, d, lambda_sq, angles_to_cosines(ang))


@pytest.fixture(scope="session")
def geom():
    return ArrayGeometry(6, 12)


@pytest.fixture(scope="session")
def grid():
    return GridSpec(0.005)


@pytest.fixture(scope="session")
def noise():
    return NoiseParams(SIGMA_SQ)


@pytest.fixture(scope="session")
def gcs_profile():
    return profile_deg(15, 30, 0.8)


@pytest.fixture(scope="session")
def gcs(gcs_profile, geom):
    return GcsKnowledge.build(gcs_profile, SIGMA_SQ, geom)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
