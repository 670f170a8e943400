import numpy as np
import pytest

from gaugework import LatticeConfig, build_gauss, build_h_total, fields_for, gibbs_state


class Model:
    """Fields, Hamiltonian and Gauss data for one small lattice."""

    def __init__(self, **kw):
        self.config = LatticeConfig(**kw)
        self.fields = fields_for(self.config)
        self.ham = build_h_total(self.fields)
        self.gauss = build_gauss(self.fields)
        self.space = self.fields.space

    def gibbs(self, beta=None, support="full"):
        return gibbs_state(self.ham.h_total, self.config.beta if beta is None else beta, support, self.gauss)


@pytest.fixture(scope="session")
def two_site():
    return Model(num_sites=2, n_max=2, mass=0.5, charge=1.0)


@pytest.fixture(scope="session")
def two_site_free():
    return Model(num_sites=2, n_max=2, mass=0.5, charge=0.0)


@pytest.fixture(scope="session")
def three_site():
    return Model(num_sites=3, n_max=2, mass=0.5, charge=1.0)


@pytest.fixture(scope="session")
def two_site_n3():
    return Model(num_sites=2, n_max=3, mass=0.5, charge=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_hermitian(rng, n):
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (x + x.conj().T) / 2


def random_unitary(rng, n):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
