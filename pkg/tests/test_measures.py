import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from entlab import measures
from entlab.errors import DomainError, InvalidDensityMatrix, InvariantViolation
from entlab.measures import (
    binary_entropy,
    concurrence,
    eof,
    eof_from_concurrence,
    fidelity_to_pure,
    measure_report,
    negative_eigenvalue_modulus,
    negativity,
    negativity_from_pt_spectrum,
    purity,
    purity_report,
    wootters_lambdas,
)
from entlab.mems import PHI_PLUS, PSI_MINUS, build_werner

from conftest import random_density

S2 = 1 / np.sqrt(2)
# h((1 + sqrt(3)/2) / 2) evaluated with 30-digit arithmetic (mpmath).
EOF_AT_HALF = 0.354578902665269884


def pure(v):
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def test_singlet():
    rho = pure(PSI_MINUS)
    assert concurrence(rho) == pytest.approx(1, abs=1e-12)
    assert eof(rho) == pytest.approx(1, abs=1e-12)
    assert negativity(rho) == pytest.approx(1, abs=1e-12)
    assert negative_eigenvalue_modulus(rho) == pytest.approx(0.5, abs=1e-12)


def test_maximally_mixed():
    rho = np.eye(4) / 4
    assert concurrence(rho) == pytest.approx(0, abs=1e-12)
    assert eof(rho) == pytest.approx(0, abs=1e-12)
    assert negativity(rho) == pytest.approx(0, abs=1e-12)


def test_product_states(rng):
    for _ in range(20):
        a = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        b = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        rho = pure(np.kron(a, b))
        assert concurrence(rho) == pytest.approx(0, abs=1e-10)
        assert negativity(rho) == pytest.approx(0, abs=1e-10)


def test_pure_state_concurrence_formula(rng):
    # For a pure state a|00> + b|01> + c|10> + d|11>, C = 2|ad - bc|.
    for _ in range(50):
        v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        v /= np.linalg.norm(v)
        assert concurrence(pure(v)) == pytest.approx(2 * abs(v[0] * v[3] - v[1] * v[2]), abs=1e-10)


def test_pure_state_negativity_equals_concurrence(rng):
    for _ in range(50):
        v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        rho = pure(v)
        assert negativity(rho) == pytest.approx(concurrence(rho), abs=1e-10)


def test_werner_three_quarters():
    rho = build_werner(0.75)
    assert concurrence(rho) == pytest.approx(0.5, abs=1e-8)
    assert eof(rho) == pytest.approx(EOF_AT_HALF, abs=1e-8)
    assert negativity(rho) == pytest.approx(0.5, abs=1e-8)


def test_werner_family_concurrence():
    for p1 in np.linspace(0.25, 1, 16):
        assert concurrence(build_werner(p1)) == pytest.approx(max(0.0, 2 * p1 - 1), abs=1e-10)


def test_bell_diagonal_concurrence(rng):
    # Bell-diagonal weights w: C = max(0, 2 max(w) - 1).
    phi_minus = S2 * np.array([1, 0, 0, -1])
    psi_plus = S2 * np.array([0, 1, 1, 0])
    for _ in range(30):
        w = rng.dirichlet(np.ones(4))
        rho = sum(wi * pure(v) for wi, v in zip(w, (PSI_MINUS, PHI_PLUS, phi_minus, psi_plus)))
        assert concurrence(rho) == pytest.approx(max(0.0, 2 * w.max() - 1), abs=1e-10)


def test_lambdas_are_descending_and_nonnegative(rng):
    lam = wootters_lambdas(random_density(rng, size=100))
    assert np.all(lam >= 0)
    assert np.all(np.diff(lam, axis=-1) <= 0)


def test_lambdas_squared_match_eigenvalues_of_rho_rho_tilde(rng):
    rho = random_density(rng)
    tilde = measures.spin_flip(rho)
    ev = np.sort(np.linalg.eigvals(rho @ tilde).real)[::-1]
    assert_allclose(wootters_lambdas(rho) ** 2, ev, atol=1e-12)


def test_concurrence_invariant_under_local_unitaries(rng):
    from entlab.ensembles import sample_cue

    rho = random_density(rng)
    u = np.kron(sample_cue(rng, n=2), sample_cue(rng, n=2))
    assert concurrence(u @ rho @ u.conj().T) == pytest.approx(concurrence(rho), abs=1e-10)
    assert negativity(u @ rho @ u.conj().T) == pytest.approx(negativity(rho), abs=1e-10)


def test_negativity_concurrence_inequalities(rng):
    # N <= C and N >= sqrt((1 - C)^2 + C^2) - (1 - C) hold for all two-qubit states.
    rho = random_density(rng, size=2000)
    c = concurrence(rho)
    n = negativity(rho)
    assert np.all(n <= c + 1e-10)
    assert np.all(n >= np.sqrt((1 - c) ** 2 + c**2) - (1 - c) - 1e-10)


def test_scalar_and_batch_agree(rng):
    rho = random_density(rng, size=5)
    batch = concurrence(rho)
    assert isinstance(concurrence(rho[0]), float)
    assert_allclose(batch, [concurrence(r) for r in rho], atol=0)


def test_binary_entropy_values():
    assert binary_entropy(0) == 0
    assert binary_entropy(1) == 0
    assert binary_entropy(0.5) == pytest.approx(1.0, abs=1e-15)
    assert binary_entropy(0.25) == pytest.approx(0.811278124459133, abs=1e-14)


def test_eof_from_concurrence_endpoints_and_domain():
    assert eof_from_concurrence(0.0) == 0
    assert eof_from_concurrence(1.0) == pytest.approx(1, abs=1e-15)
    assert eof_from_concurrence(0.5) == pytest.approx(EOF_AT_HALF, abs=1e-14)
    assert eof_from_concurrence(1 + 1e-13) == pytest.approx(1, abs=1e-12)
    for bad in (-0.1, 1.01, np.nan):
        with pytest.raises(DomainError):
            eof_from_concurrence(bad)


@given(st.floats(0, 1), st.floats(0, 1))
def test_eof_monotone_in_concurrence(a, b):
    lo, hi = sorted((a, b))
    assert eof_from_concurrence(lo) <= eof_from_concurrence(hi) + 1e-15


@given(st.floats(0, 1))
def test_eof_bounded_by_concurrence(c):
    # E(C) lies between C^2 and C on [0, 1].
    e = eof_from_concurrence(c)
    assert c * c - 1e-14 <= e <= c + 1e-14


def test_pt_spectrum_with_two_negative_eigenvalues_is_rejected():
    with pytest.raises(InvariantViolation):
        negativity_from_pt_spectrum(np.array([1.2, 0.2, -0.1, -0.3]))


def test_invalid_density_matrices():
    with pytest.raises(InvalidDensityMatrix):
        concurrence(np.eye(4))
    with pytest.raises(InvalidDensityMatrix):
        concurrence(np.eye(3) / 3)
    with pytest.raises(InvalidDensityMatrix):
        measure_report(np.diag([0.6, 0.6, -0.2, 0.0]))
    with pytest.raises(InvalidDensityMatrix):
        concurrence(np.array([[0.5, 0.1, 0, 0], [0, 0.5, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]]))


def test_purity_and_report():
    assert purity(np.eye(4) / 4) == pytest.approx(0.25)
    report = purity_report(np.eye(4) / 4)
    assert report.participation_ratio == pytest.approx(4)
    assert report.separable_by_purity
    assert not purity_report(pure(PSI_MINUS)).separable_by_purity


def test_purity_at_most_one_third_is_separable(rng):
    # Mixing towards I/4 until the purity drops below 1/3.
    rho = random_density(rng, size=3000)
    mix = 0.5 * rho + 0.5 * np.eye(4) / 4
    low = purity(mix) <= 1 / 3
    assert low.sum() > 100
    assert np.all(concurrence(mix[low]) <= 1e-10)
    assert np.all(negativity(mix[low]) <= 1e-10)


def test_fidelity_to_pure():
    assert fidelity_to_pure(pure(PSI_MINUS), PSI_MINUS) == pytest.approx(1)
    assert fidelity_to_pure(np.eye(4) / 4, PSI_MINUS) == pytest.approx(0.25)
    with pytest.raises(DomainError):
        fidelity_to_pure(np.eye(4) / 4, [1, 1, 0, 0])


def test_measure_report_fields():
    r = measure_report(pure(PSI_MINUS)).to_dict()
    assert set(r) == {"concurrence", "eof", "negativity", "purity", "participation_ratio"}
    assert r["concurrence"] == pytest.approx(1)
