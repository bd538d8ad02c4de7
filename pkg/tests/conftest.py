import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "entlab",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("entlab")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_hermitian(g, n=4, size=None):
    shape = (n, n) if size is None else (size, n, n)
    a = g.standard_normal(shape) + 1j * g.standard_normal(shape)
    return 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))


def random_density(g, size=None):
    """Ginibre-induced random density matrix, independent of entlab's samplers."""
    shape = (4, 4) if size is None else (size, 4, 4)
    a = g.standard_normal(shape) + 1j * g.standard_normal(shape)
    rho = a @ np.conj(np.swapaxes(a, -1, -2))
    return rho / np.trace(rho, axis1=-2, axis2=-1)[..., None, None]
