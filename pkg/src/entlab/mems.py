"""Maximally entangled mixed states and spectrum-only entanglement bounds.

A spectrum here is a length-4 array ``p`` with ``p1 >= p2 >= p3 >= p4 >= 0``
summing to one.  The functions in this module never sort their input:
C* is order sensitive, so an unsorted spectrum is a caller bug and raises
:class:`InvalidSpectrum`.  Use :func:`normalize_spectrum` to sort and
renormalize explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, InvalidSpectrum
from .measures import eof_from_concurrence

SPECTRUM_TOL = 1e-12
SPECIAL_CONDITION_TOL = 1e-10

_S2 = 1.0 / np.sqrt(2.0)
KET_00 = np.array([1, 0, 0, 0], dtype=complex)
KET_01 = np.array([0, 1, 0, 0], dtype=complex)
KET_10 = np.array([0, 0, 1, 0], dtype=complex)
KET_11 = np.array([0, 0, 0, 1], dtype=complex)
PSI_MINUS = _S2 * (KET_01 - KET_10)
PSI_PLUS = _S2 * (KET_01 + KET_10)
PHI_MINUS = _S2 * (KET_00 - KET_11)
PHI_PLUS = _S2 * (KET_00 + KET_11)


def check_spectrum(p, tol: float = SPECTRUM_TOL, stacked: bool = False) -> np.ndarray:
    """Return ``p`` as a float array after validating it is a sorted probability vector.

    With ``stacked=True`` a stack of spectra ``(..., 4)`` is validated row by row.
    """
    try:
        p = np.asarray(p, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidSpectrum(f"spectrum is not numeric: {p!r}") from exc
    if (p.ndim < 1 or p.shape[-1] != 4) or (not stacked and p.ndim != 1):
        raise InvalidSpectrum(f"spectrum must have 4 entries, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise InvalidSpectrum(f"spectrum has non-finite entries: {p}")
    if p.min() < -tol:
        raise InvalidSpectrum(f"spectrum has negative entry: {p}")
    if np.any(np.diff(p, axis=-1) > tol):
        raise InvalidSpectrum(f"spectrum not sorted in decreasing order: {p}")
    if np.abs(p.sum(axis=-1) - 1.0).max() > tol:
        raise InvalidSpectrum(f"spectrum sums to {p.sum(axis=-1)}, not 1")
    return np.clip(p, 0.0, None)


def normalize_spectrum(values, clamp: float = 1e-9) -> tuple[np.ndarray, bool]:
    """Sort descending, clamp small negatives and renormalize.

    Returns the spectrum together with a flag telling whether anything
    beyond roundoff had to change (reordering or a sum off by more than
    the spectrum tolerance).
    """
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.shape != (4,):
        raise InvalidSpectrum(f"spectrum must have 4 entries, got {v.shape}")
    if v.min() < -clamp:
        raise InvalidSpectrum(f"eigenvalue {v.min():.3e} is below the clamp threshold")
    out = -np.sort(-np.clip(v, 0.0, None))
    total = out.sum()
    if total <= 0:
        raise InvalidSpectrum("spectrum has zero total weight")
    changed = bool(np.any(np.diff(v) > SPECTRUM_TOL) or abs(total - 1.0) > SPECTRUM_TOL)
    return out / total, changed


@dataclass(frozen=True)
class MemsVariant:
    """Basis assignment for the MEMS family.

    ``form="psi"`` uses (Psi-, |00>, Psi+, |11>) for (p1, p2, p3, p4);
    ``form="phi"`` uses (Phi-, |01>, Phi+, |10>).  ``swap_bell`` exchanges the
    two Bell states and ``swap_product`` the two product states.
    """

    form: str = "psi"
    swap_bell: bool = False
    swap_product: bool = False

    def __post_init__(self):
        if self.form not in ("psi", "phi"):
            raise ValueError(f"unknown MEMS form {self.form!r}; expected 'psi' or 'phi'")

    def basis(self) -> np.ndarray:
        """Unitary whose columns are the eigenvectors for p1..p4."""
        if self.form == "psi":
            bell_a, prod_a, bell_b, prod_b = PSI_MINUS, KET_00, PSI_PLUS, KET_11
        else:
            bell_a, prod_a, bell_b, prod_b = PHI_MINUS, KET_01, PHI_PLUS, KET_10
        if self.swap_bell:
            bell_a, bell_b = bell_b, bell_a
        if self.swap_product:
            prod_a, prod_b = prod_b, prod_a
        return np.column_stack([bell_a, prod_a, bell_b, prod_b])


ALL_VARIANTS = tuple(
    MemsVariant(form, sb, sp) for form in ("psi", "phi") for sb in (False, True) for sp in (False, True)
)


def build_mems(p, variant: MemsVariant = MemsVariant()) -> np.ndarray:
    p = check_spectrum(p)
    basis = variant.basis()
    return (basis * p) @ basis.conj().T


class StarValue(NamedTuple):
    clipped: float
    raw: float


def c_star(p) -> StarValue:
    """Concurrence of the MEMS with spectrum ``p``: ``p1 - p3 - 2 sqrt(p2 p4)``."""
    p = check_spectrum(p)
    raw = float(p[0] - p[2] - 2.0 * np.sqrt(p[1] * p[3]))
    return StarValue(max(0.0, raw), raw)


def neg_star(p) -> StarValue:
    """Negativity (doubled) of the MEMS with spectrum ``p``."""
    p = check_spectrum(p)
    raw = float(-p[1] - p[3] + np.hypot(p[0] - p[2], p[1] - p[3]))
    return StarValue(max(0.0, raw), raw)


def eof_upper_bound(p) -> float:
    """Largest entanglement of formation reachable on the unitary orbit of ``diag(p)``.

    Uses ``C*^2`` inside the square root, consistent with the
    concurrence-to-EOF formula.
    """
    return float(eof_from_concurrence(c_star(p).clipped))


def build_werner(p1: float) -> np.ndarray:
    """Singlet weight ``p1`` mixed evenly with the other three Bell states."""
    p1 = float(p1)
    if not (0.25 - 1e-12 <= p1 <= 1.0 + 1e-12):
        raise DomainError(f"Werner weight p1 must lie in [1/4, 1], got {p1}")
    p1 = min(max(p1, 0.25), 1.0)
    q = (1.0 - p1) / 3.0
    rho = p1 * np.outer(PSI_MINUS, PSI_MINUS.conj())
    for ket in (PSI_PLUS, PHI_MINUS, PHI_PLUS):
        rho = rho + q * np.outer(ket, ket.conj())
    return rho


def werner_spectrum(p1: float) -> np.ndarray:
    q = (1.0 - p1) / 3.0
    return np.array([p1, q, q, q])


class SpecialCondition(NamedTuple):
    satisfied: bool
    rho4_spectrum: np.ndarray
    rho4_purity: float


def special_condition(p) -> SpecialCondition:
    """Test ``p3 = p2 + p4 - sqrt(p2 p4)``, under which the residual state is separable.

    The residual ``rho4`` has unnormalized spectrum
    ``(p3 + 2 sqrt(p2 p4), p2, p3, p4)``.  When that weight vanishes (pure
    states) the normalized purity is undefined and reported as NaN.
    """
    p = check_spectrum(p)
    root = np.sqrt(p[1] * p[3])
    satisfied = abs(p[2] - (p[1] + p[3] - root)) <= SPECIAL_CONDITION_TOL
    rho4 = np.array([p[2] + 2.0 * root, p[1], p[2], p[3]])
    weight = rho4.sum()
    rho4_purity = float(np.sum(rho4**2) / weight**2) if weight > 0 else float("nan")
    return SpecialCondition(bool(satisfied), rho4, rho4_purity)
