import numpy as np
import pytest
from numpy.testing import assert_allclose

from entlab.ensembles import (
    RngStream,
    conjugate_diagonal,
    haar_from_gaussian,
    sample_cue,
    sample_density,
    sample_spectrum,
)
from entlab.errors import InvalidSpectrum
from entlab.linalg import dagger, eigvalsh
from entlab.measures import check_density


def test_stream_is_reproducible():
    a = RngStream(7, 1).generator.standard_normal(5)
    b = RngStream(7, 1).generator.standard_normal(5)
    assert np.array_equal(a, b)


def test_streams_and_substreams_differ():
    draws = {
        "s0": RngStream(7, 0).generator.random(),
        "s1": RngStream(7, 1).generator.random(),
        "seed8": RngStream(8, 0).generator.random(),
        "sub0": RngStream(7, 0).substream(0).generator.random(),
        "sub1": RngStream(7, 0).substream(1).generator.random(),
    }
    assert len(set(draws.values())) == len(draws)


def test_substream_depends_only_on_its_path():
    a = RngStream(3, 2).substream(5).substream(1)
    b = RngStream(3, 2).substream(5).substream(1)
    assert a.key == (2, 5, 1)
    assert a.generator.random() == b.generator.random()


def test_seed_must_be_unsigned_64_bit():
    with pytest.raises(ValueError):
        RngStream(-1)


def test_sample_spectrum_is_sorted_probability_vector():
    p = sample_spectrum(RngStream(1), size=1000)
    assert np.all(np.diff(p, axis=-1) <= 0)
    assert_allclose(p.sum(axis=-1), 1, atol=1e-14)
    assert p.min() >= 0


def test_sample_spectrum_is_flat_on_the_simplex():
    # Sorted flat Dirichlet(1,1,1,1): E[p1] = (1 + 1/2 + 1/3 + 1/4) / 4 = 25/48.
    p = sample_spectrum(RngStream(2), size=200_000)
    assert p[:, 0].mean() == pytest.approx(25 / 48, abs=2e-3)
    assert p[:, 3].mean() == pytest.approx(1 / 16, abs=1e-3)


def test_cue_samples_are_unitary():
    u = sample_cue(RngStream(3), size=100)
    assert_allclose(dagger(u) @ u, np.broadcast_to(np.eye(4), u.shape), atol=1e-13)
    assert sample_cue(RngStream(3)).shape == (4, 4)


def test_haar_second_and_fourth_moments():
    u = sample_cue(RngStream(4), size=100_000)
    w = np.abs(u) ** 2
    assert_allclose(w.mean(axis=0), 0.25, atol=5e-3)
    # E|U_ij|^4 = 2 / (n (n + 1)) = 0.1 for n = 4.
    assert_allclose((w**2).mean(axis=0), 0.1, atol=5e-3)


def test_haar_trace_moments():
    # For Haar U(n): E|tr U|^2 = 1 and E|tr U|^4 = 2 (n >= 2).
    t = np.abs(np.trace(sample_cue(RngStream(5), size=100_000), axis1=-2, axis2=-1)) ** 2
    assert t.mean() == pytest.approx(1, abs=0.02)
    assert (t**2).mean() == pytest.approx(2, abs=0.08)


def test_phase_fix_makes_r_diagonal_positive():
    g = np.random.default_rng(0)
    z = g.standard_normal((4, 4)) + 1j * g.standard_normal((4, 4))
    u = haar_from_gaussian(z)
    r = dagger(u) @ z
    assert_allclose(np.tril(r, -1), 0, atol=1e-12)
    assert np.all(np.diagonal(r).real > 0)
    assert_allclose(np.diagonal(r).imag, 0, atol=1e-12)


def test_sample_prefixes_are_stable():
    a = sample_cue(RngStream(6).generator, size=10)
    g = RngStream(6).generator
    b = np.concatenate([sample_cue(g, size=4), sample_cue(g, size=6)])
    assert np.array_equal(a, b)


def test_sample_density_keeps_spectrum():
    p = np.array([0.5, 0.3, 0.15, 0.05])
    rho = sample_density(RngStream(7), p, size=50)
    check_density(rho)
    assert_allclose(eigvalsh(rho), np.broadcast_to(p, (50, 4)), atol=1e-13)


def test_sample_density_one_spectrum_per_sample():
    p = sample_spectrum(RngStream(8), size=20)
    rho = sample_density(RngStream(9), p, size=20)
    assert_allclose(eigvalsh(rho), p, atol=1e-13)
    with pytest.raises(InvalidSpectrum):
        sample_density(RngStream(9), [0.1, 0.9, 0, 0])


def test_conjugate_diagonal_is_hermitian():
    u = sample_cue(RngStream(10), size=5)
    rho = conjugate_diagonal(u, np.array([0.4, 0.3, 0.2, 0.1]))
    assert np.array_equal(rho, dagger(rho))


def test_determinant_has_unit_modulus():
    u = sample_cue(RngStream(11), size=1000)
    assert_allclose(np.abs(np.linalg.det(u)), 1, atol=1e-10)


def test_trivial_spectra():
    pure = sample_density(RngStream(12), [1, 0, 0, 0], size=10)
    assert_allclose(np.einsum("nij,nji->n", pure, pure).real, 1, atol=1e-12)
    mixed = sample_density(RngStream(12), [0.25] * 4, size=10)
    assert_allclose(mixed, np.broadcast_to(np.eye(4) / 4, mixed.shape), atol=1e-15)


def test_haar_invariance_of_concurrence_distribution():
    from scipy.stats import ks_2samp

    from entlab.measures import concurrence

    p = np.array([0.6, 0.25, 0.1, 0.05])
    rho = sample_density(RngStream(13), p, size=10_000)
    w = sample_cue(RngStream(14))
    shifted = w @ rho @ dagger(w)
    stat = ks_2samp(concurrence(rho), concurrence(shifted)).statistic
    assert stat < 0.02
