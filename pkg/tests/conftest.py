import os

import numpy as np
import pytest
from hypothesis import settings

from innerdyn.maps import FiniteBlaschke, HalfplaneMoebiusModel, InfiniteBlaschke, PowerMap, quadratic

os.environ.setdefault("INNERDYN_TEST_MODE", "1")

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(scope="session")
def z2():
    return PowerMap(2)


@pytest.fixture(scope="session")
def blaschke_half():
    # degree 2, fixes 0: z (z + 0.5)/(1 + 0.5 z)
    return FiniteBlaschke([0.0, -0.5])


@pytest.fixture(scope="session")
def inf_blaschke():
    return InfiniteBlaschke()


@pytest.fixture(scope="session")
def quad02():
    return quadratic(0.2)


@pytest.fixture(scope="session")
def cowen_models():
    return {
        "hyperbolic": HalfplaneMoebiusModel.affine(2.0, 0.0),
        "simply_parabolic": HalfplaneMoebiusModel.affine(1.0, 1.0),
        "doubly_parabolic": HalfplaneMoebiusModel.affine(1.0, 1j),
    }


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def disk_points(rng, n, rmax=0.95):
    r = rmax * np.sqrt(rng.random(n))
    return r * np.exp(2j * np.pi * rng.random(n))


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
