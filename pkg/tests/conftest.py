import numpy as np
import pytest

from spintherm.linalg import DensityMatrix, HermitianOperator
from spintherm.register import SpinRegister
from spintherm.rng import complex_normal, make_rng


def random_hermitian(dim, seed):
    m = complex_normal(make_rng(seed), (dim, dim))
    return HermitianOperator((m + m.conj().T) / 2)


def random_density(dim, seed, rank=None, register=None):
    rng = make_rng(seed)
    r = rank or dim
    m = complex_normal(rng, (dim, r))
    rho = m @ m.conj().T
    rho /= np.trace(rho).real
    return DensityMatrix(rho, register=register)


def random_state(dim, seed):
    z = complex_normal(make_rng(seed), dim)
    return z / np.linalg.norm(z)


@pytest.fixture(scope="session")
def reg3():
    return SpinRegister(3)


@pytest.fixture(scope="session")
def reg4_cells():
    return SpinRegister(4, cells=((0, 1), (2, 3)))
