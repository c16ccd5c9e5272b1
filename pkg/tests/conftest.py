import itertools

import numpy as np
import pytest

from qretrieve.optics import PhaseVector, dft_matrix
from qretrieve.statekit import psi6

THETA_OBJ = (0.0, 3.22, 4.10, 4.57, 1.35, 4.11)


def pytest_addoption(parser):
    parser.addoption(
        '--run-slow',
        action='store_true',
        default=False,
        help='run full-scale reproductions',
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption('--run-slow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --run-slow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


def naive_permanent(mat):
    """Sum over all permutations; only for small test matrices."""
    a = np.asarray(mat, dtype=complex)
    n = a.shape[0]
    return sum(
        np.prod([a[i, p[i]] for i in range(n)])
        for p in itertools.permutations(range(n))
    )


def random_unitary(m, rng):
    z = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope='module')
def state6():
    return psi6()


@pytest.fixture(scope='module')
def u6():
    return dft_matrix(6)


@pytest.fixture(scope='module')
def theta_obj():
    return PhaseVector(THETA_OBJ)
