"""Entanglement and mixedness measures for two-qubit density matrices.

Every function accepts a single 4x4 density matrix or a stack
``(..., 4, 4)``; scalar inputs return Python floats.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, InvalidDensityMatrix, InvariantViolation
from .linalg import (
    SIGMA_Y,
    eigvalsh,
    hermiticity_error,
    partial_transpose_b,
    psd_sqrt,
    singular_values,
    tensor,
)

YY = tensor(SIGMA_Y, SIGMA_Y)

TRACE_TOL = 1e-12
EIGEN_FLOOR = -1e-10
NEGATIVE_EIG_TOL = 1e-9
PURITY_SEPARABLE = 1.0 / 3.0


def _scalar(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def check_density(rho: np.ndarray, check_spectrum: bool = True) -> np.ndarray:
    """Validate a two-qubit density matrix (or stack) and return it as complex."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape[-2:] != (4, 4):
        raise InvalidDensityMatrix(f"expected 4x4 density matrix, got shape {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise InvalidDensityMatrix("density matrix has non-finite entries")
    herm = hermiticity_error(rho)
    if herm > 1e-12:
        raise InvalidDensityMatrix(f"density matrix not Hermitian (error {herm:.3e})")
    tr = np.trace(rho, axis1=-2, axis2=-1)
    if np.abs(tr - 1.0).max(initial=0.0) > TRACE_TOL:
        raise InvalidDensityMatrix(f"density matrix trace deviates from 1 by {np.abs(tr - 1).max():.3e}")
    if check_spectrum:
        low = eigvalsh(rho, check=False)[..., -1]
        if low.size and low.min() < EIGEN_FLOOR:
            raise InvalidDensityMatrix(f"density matrix has eigenvalue {low.min():.3e}")
    return rho


def spin_flip(rho: np.ndarray) -> np.ndarray:
    """Spin-flipped state ``(Y x Y) rho^* (Y x Y)``."""
    rho = np.asarray(rho, dtype=complex)
    return YY @ np.conj(rho) @ YY


def wootters_lambdas(rho: np.ndarray) -> np.ndarray:
    """Descending square roots of the eigenvalues of ``rho rho~``.

    These are the singular values of ``sqrt(rho~) sqrt(rho)``, whose squares
    are the eigenvalues of the Hermitian matrix ``sqrt(rho) rho~ sqrt(rho)``.
    Taking singular values directly keeps vanishing lambdas at roundoff level.
    """
    root = psd_sqrt(rho)
    return singular_values(spin_flip(root) @ root)


def lambdas_from_factor(x: np.ndarray) -> np.ndarray:
    """Same lambdas for ``rho = x x^dagger`` given any square factor ``x``."""
    return singular_values(np.swapaxes(x, -1, -2) @ YY @ x)


def concurrence_from_lambdas(lam: np.ndarray) -> np.ndarray:
    return np.maximum(0.0, 2.0 * lam[..., 0] - lam.sum(axis=-1))


def concurrence(rho: np.ndarray):
    rho = check_density(rho, check_spectrum=False)
    return _scalar(np.clip(concurrence_from_lambdas(wootters_lambdas(rho)), 0.0, 1.0))


def binary_entropy(x):
    """Shannon entropy in bits, with ``H(0) = H(1) = 0``."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    out = np.zeros_like(x)
    inner = (x > 0.0) & (x < 1.0)
    xi = x[inner]
    out[inner] = -xi * np.log2(xi) - (1.0 - xi) * np.log2(1.0 - xi)
    return _scalar(out)


def eof_from_concurrence(c):
    """Entanglement of formation (bits) of a two-qubit state with concurrence ``c``."""
    c = np.asarray(c, dtype=float)
    if np.any(c < -1e-12) or np.any(c > 1.0 + 1e-12) or not np.all(np.isfinite(c)):
        raise DomainError(f"concurrence outside [0, 1]: {c}")
    c = np.clip(c, 0.0, 1.0)
    return binary_entropy(0.5 * (1.0 + np.sqrt(1.0 - c * c)))


def eof(rho: np.ndarray):
    return eof_from_concurrence(concurrence(rho))


def partial_transpose_spectrum(rho: np.ndarray) -> np.ndarray:
    return eigvalsh(partial_transpose_b(rho), check=False)


def negativity_from_pt_spectrum(mu: np.ndarray) -> np.ndarray:
    n_negative = np.sum(mu < -NEGATIVE_EIG_TOL, axis=-1)
    if np.any(n_negative > 1):
        raise InvariantViolation(
            "partial transpose has more than one negative eigenvalue; "
            "impossible for a valid two-qubit state"
        )
    return np.maximum(0.0, -mu[..., -1])


def negative_eigenvalue_modulus(rho: np.ndarray):
    """E_N: modulus of the (single) negative eigenvalue of the partial transpose."""
    rho = check_density(rho, check_spectrum=False)
    return _scalar(negativity_from_pt_spectrum(partial_transpose_spectrum(rho)))


def negativity(rho: np.ndarray):
    """Negativity ``2 E_N``, in ``[0, 1]`` for two qubits."""
    return _scalar(2.0 * np.asarray(negative_eigenvalue_modulus(rho)))


class PurityReport(NamedTuple):
    purity: float
    participation_ratio: float
    separable_by_purity: bool


def purity(rho: np.ndarray):
    rho = np.asarray(rho, dtype=complex)
    # Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho.
    return _scalar(np.sum(np.abs(rho) ** 2, axis=(-2, -1)))


def purity_report(rho: np.ndarray) -> PurityReport:
    """Purity, participation ratio and the ``Tr rho^2 <= 1/3`` separability test."""
    rho = check_density(rho)
    if rho.ndim != 2:
        raise ValueError("purity_report takes a single density matrix")
    p = float(purity(rho))
    return PurityReport(p, 1.0 / p, p <= PURITY_SEPARABLE + 1e-12)


def fidelity_to_pure(rho: np.ndarray, psi: np.ndarray):
    """``<psi| rho |psi>`` for a normalized state vector ``psi``."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if abs(np.vdot(psi, psi).real - 1.0) > 1e-12:
        raise DomainError(f"state vector not normalized: |psi|^2 = {np.vdot(psi, psi).real:.15g}")
    rho = np.asarray(rho, dtype=complex)
    val = np.einsum("i,...ij,j->...", np.conj(psi), rho, psi).real
    return _scalar(np.clip(val, 0.0, 1.0))


@dataclass(frozen=True)
class MeasureReport:
    concurrence: float
    eof: float
    negativity: float
    purity: float
    participation_ratio: float

    def to_dict(self) -> dict:
        return asdict(self)


def measure_report(rho: np.ndarray) -> MeasureReport:
    rho = check_density(rho)
    c = concurrence(rho)
    pr = purity_report(rho)
    return MeasureReport(
        concurrence=c,
        eof=eof_from_concurrence(c),
        negativity=negativity(rho),
        purity=pr.purity,
        participation_ratio=pr.participation_ratio,
    )
