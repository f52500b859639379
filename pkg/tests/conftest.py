import numpy as np
import pytest

from robinmetric.domains import ball, ellipsoid, normalize_dagger
from robinmetric.robin import MfsRobin, mfs_build

# inflation 2.5 puts p = 0 boundary residuals below 1e-7 (ball) and 1e-6 (ellipsoid)
SHARED_MFS = {"M": 4000, "N": 2500, "inflation": 2.5}


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: runs longer than a few seconds")


@pytest.fixture(scope="session")
def ball2():
    return ball(2)


@pytest.fixture(scope="session")
def ellipsoid21():
    return ellipsoid([2.0, 1.0])


@pytest.fixture(scope="session")
def mfs_ball2(ball2):
    return MfsRobin(mfs_build(ball2, seed=0, **SHARED_MFS), ball2)


@pytest.fixture(scope="session")
def mfs_ellipsoid21(ellipsoid21):
    return MfsRobin(mfs_build(ellipsoid21, seed=0, **SHARED_MFS), ellipsoid21)


def unit(n, j, dtype=complex):
    e = np.zeros(n, dtype)
    e[j] = 1
    return e


def normalized_ball(n):
    return normalize_dagger(ball(n), unit(n, n - 1))[1]
