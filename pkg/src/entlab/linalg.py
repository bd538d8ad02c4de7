"""Dense complex linear algebra for 2x2 and 4x4 matrices.

Two-qubit operators use the computational basis ordering
|00>, |01>, |10>, |11>, with the first (control) qubit as the leftmost
tensor factor.

All routines accept a single matrix of shape ``(n, n)`` or a stack of
matrices of shape ``(..., n, n)``; stacks are processed in one vectorized
pass, which is what makes million-sample orbit scans affordable.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import NoConvergence, NotHermitian, NotPSD

IDENTITY2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

HERMITIAN_TOL = 1e-12
JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 50
PSD_CLAMP = 1e-9


class EigenSystem(NamedTuple):
    """Eigenvalues sorted descending, with matching column eigenvectors."""

    values: np.ndarray
    vectors: np.ndarray


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product ``a (x) b`` with ``a`` acting on the first qubit."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != (2, 2) or b.shape != (2, 2):
        raise ValueError(f"tensor expects two 2x2 matrices, got {a.shape} and {b.shape}")
    return np.kron(a, b)


def _square_stack(h: np.ndarray) -> np.ndarray:
    h = np.asarray(h)
    if h.ndim < 2 or h.shape[-1] != h.shape[-2]:
        raise ValueError(f"expected square matrix (stack), got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise ValueError("matrix has non-finite entries")
    return h


def hermiticity_error(h: np.ndarray) -> float:
    """Largest entry of ``|H - H^dagger|`` over the whole stack."""
    h = np.asarray(h)
    if h.size == 0:
        return 0.0
    return float(np.abs(h - dagger(h)).max())


def check_hermitian(h: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    h = _square_stack(h)
    err = hermiticity_error(h)
    if err > tol:
        raise NotHermitian(f"matrix is not Hermitian: max |H - H^+| = {err:.3e} > {tol:.0e}")
    return h


def _jacobi(h: np.ndarray, want_vectors: bool, tol: float, max_sweeps: int):
    """Cyclic complex Jacobi on a stack; returns unsorted eigenvalues (and vectors).

    Internally the stack axis is moved last so every row/column slice is a
    contiguous ``(n, batch)`` block.
    """
    n = h.shape[-1]
    batch_shape = h.shape[:-2]
    # Symmetrize so that roundoff-level anti-Hermitian parts never feed the rotations.
    herm = 0.5 * (h + dagger(h))
    a = np.ascontiguousarray(np.moveaxis(herm.reshape(-1, n, n), 0, -1), dtype=complex)
    size = a.shape[-1]
    v = None
    if want_vectors:
        v = np.zeros((n, n, size), dtype=complex)
        for k in range(n):
            v[k, k] = 1.0
    scale = np.maximum(1.0, np.abs(a).max(axis=(0, 1))) if size else np.ones(0)
    thresh = tol * scale
    iu, ju = np.triu_indices(n, 1)

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for sweep in range(max_sweeps + 1):
            off = np.abs(a[iu, ju]).max(axis=0) if n > 1 and size else np.zeros(size)
            if np.all(off <= thresh):
                break
            if sweep == max_sweeps:
                raise NoConvergence(
                    f"Jacobi did not converge in {max_sweeps} sweeps "
                    f"(max off-diagonal {off.max():.3e})"
                )
            for i in range(n - 1):
                for j in range(i + 1, n):
                    g = a[i, j]
                    ag = np.abs(g)
                    active = ag > 1e-3 * thresh
                    safe = np.where(active, ag, 1.0)
                    phase = np.where(active, g / safe, 1.0)
                    # Real rotation on diag(1, conj(phase)) * block * diag(1, phase).
                    theta = (a[j, j].real - a[i, i].real) / (2.0 * safe)
                    t = np.copysign(1.0, theta) / (np.abs(theta) + np.sqrt(1.0 + theta * theta))
                    t = np.where(active, t, 0.0)
                    c = 1.0 / np.sqrt(1.0 + t * t)
                    s = t * c
                    sp = s * phase
                    sp_conj = np.conj(sp)
                    cp = c * phase
                    cp_conj = np.conj(cp)

                    col_i = a[:, i].copy()
                    col_j = a[:, j].copy()
                    a[:, i] = c * col_i - sp_conj * col_j
                    a[:, j] = s * col_i + cp_conj * col_j
                    row_i = a[i].copy()
                    row_j = a[j].copy()
                    a[i] = c * row_i - sp * row_j
                    a[j] = s * row_i + cp * row_j
                    a[i, j] = 0.0
                    a[j, i] = 0.0
                    if v is not None:
                        vi = v[:, i].copy()
                        vj = v[:, j].copy()
                        v[:, i] = c * vi - sp_conj * vj
                        v[:, j] = s * vi + cp_conj * vj

    values = np.stack([a[k, k].real for k in range(n)], axis=-1).reshape(*batch_shape, n)
    vectors = None
    if v is not None:
        vectors = np.moveaxis(v, -1, 0).reshape(*batch_shape, n, n)
    return values, vectors


def hermitian_eigensystem(
    h: np.ndarray,
    tol: float = JACOBI_TOL,
    max_sweeps: int = JACOBI_MAX_SWEEPS,
) -> EigenSystem:
    """Eigendecomposition of a Hermitian matrix (or stack) by cyclic Jacobi.

    Eigenvalues are returned in descending order with eigenvectors as the
    columns of ``vectors``.  For degenerate eigenvalues only the spanned
    subspace is meaningful.

    Raises
    ------
    NotHermitian
        If ``max |H - H^dagger| > 1e-12``.
    NoConvergence
        If the off-diagonal part does not drop below ``tol`` (scaled by
        ``max(1, max|H_ij|)``) within ``max_sweeps`` sweeps.
    """
    h = check_hermitian(h)
    values, vectors = _jacobi(h, True, tol, max_sweeps)
    order = np.argsort(-values, axis=-1, kind="stable")
    values = np.take_along_axis(values, order, axis=-1)
    vectors = np.take_along_axis(vectors, order[..., None, :], axis=-1)
    return EigenSystem(values, vectors)


def eigvalsh(
    h: np.ndarray,
    tol: float = JACOBI_TOL,
    max_sweeps: int = JACOBI_MAX_SWEEPS,
    check: bool = True,
) -> np.ndarray:
    """Descending eigenvalues only; skips eigenvector accumulation."""
    h = check_hermitian(h) if check else _square_stack(h)
    values, _ = _jacobi(h, False, tol, max_sweeps)
    return -np.sort(-values, axis=-1)


def singular_values(
    m: np.ndarray,
    tol: float = 1e-14,
    max_sweeps: int = JACOBI_MAX_SWEEPS,
) -> np.ndarray:
    """Descending singular values of a square matrix (or stack).

    One-sided (Hestenes) Jacobi: column pairs are rotated until mutually
    orthogonal, then the column norms are the singular values.  Zero
    singular values come out at roundoff level instead of the
    ``sqrt(eps)`` level one gets from eigenvalues of ``M^dagger M``.
    """
    m = _square_stack(m)
    n = m.shape[-1]
    batch_shape = m.shape[:-2]
    a = np.ascontiguousarray(np.moveaxis(m.reshape(-1, n, n), 0, -1), dtype=complex)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for sweep in range(max_sweeps + 1):
            rotated = False
            for i in range(n - 1):
                for j in range(i + 1, n):
                    ai = a[:, i].copy()
                    aj = a[:, j].copy()
                    alpha = (ai.real**2 + ai.imag**2).sum(axis=0)
                    beta = (aj.real**2 + aj.imag**2).sum(axis=0)
                    g = (np.conj(ai) * aj).sum(axis=0)
                    ag = np.abs(g)
                    active = ag > tol * np.sqrt(alpha * beta)
                    if not active.any():
                        continue
                    if sweep == max_sweeps:
                        raise NoConvergence(f"one-sided Jacobi did not converge in {max_sweeps} sweeps")
                    rotated = True
                    safe = np.where(active, ag, 1.0)
                    phase = np.where(active, g / safe, 1.0)
                    theta = (beta - alpha) / (2.0 * safe)
                    t = np.copysign(1.0, theta) / (np.abs(theta) + np.sqrt(1.0 + theta * theta))
                    t = np.where(active, t, 0.0)
                    c = 1.0 / np.sqrt(1.0 + t * t)
                    s = t * c
                    a[:, i] = c * ai - np.conj(s * phase) * aj
                    a[:, j] = s * ai + np.conj(c * phase) * aj
            if not rotated:
                break
    sv = np.sqrt((a.real**2 + a.imag**2).sum(axis=0))
    sv = np.moveaxis(sv, 0, -1).reshape(*batch_shape, n)
    return -np.sort(-sv, axis=-1)


def psd_sqrt(rho: np.ndarray) -> np.ndarray:
    """Principal square root of a positive semidefinite matrix (or stack).

    Eigenvalues in ``[-1e-9, 0)`` are treated as roundoff and clamped to zero.
    """
    values, vectors = hermitian_eigensystem(rho)
    if values.size and values.min() < -PSD_CLAMP:
        raise NotPSD(f"matrix has eigenvalue {values.min():.3e} < -{PSD_CLAMP:.0e}")
    root = np.sqrt(np.clip(values, 0.0, None))
    return (vectors * root[..., None, :]) @ dagger(vectors)


def partial_transpose_b(rho: np.ndarray) -> np.ndarray:
    """Transpose on the second-qubit indices of a 4x4 operator (or stack)."""
    rho = np.asarray(rho)
    if rho.shape[-2:] != (4, 4):
        raise ValueError(f"partial_transpose_b expects 4x4 matrices, got {rho.shape}")
    lead = rho.shape[:-2]
    t = rho.reshape(*lead, 2, 2, 2, 2)
    return np.swapaxes(t, -3, -1).reshape(*lead, 4, 4)


def partial_trace(rho: np.ndarray, keep: int = 0) -> np.ndarray:
    """Reduced 2x2 state of qubit ``keep`` (0 = first/control, 1 = second)."""
    rho = np.asarray(rho)
    if rho.shape[-2:] != (4, 4):
        raise ValueError(f"partial_trace expects 4x4 matrices, got {rho.shape}")
    t = rho.reshape(*rho.shape[:-2], 2, 2, 2, 2)
    if keep == 0:
        return np.einsum("...ijkj->...ik", t)
    if keep == 1:
        return np.einsum("...ijil->...jl", t)
    raise ValueError(f"keep must be 0 or 1, got {keep}")


def matrix_to_json(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return {
        "dim": int(m.shape[0]),
        "re": [[float(f"{x:.12g}") for x in row] for row in m.real],
        "im": [[float(f"{x:.12g}") for x in row] for row in m.imag],
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        dim = int(obj["dim"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros((dim, dim))), dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed matrix JSON: {exc}") from exc
    if dim not in (2, 4) or re.shape != (dim, dim) or im.shape != (dim, dim):
        raise ValueError(f"matrix JSON has dim={dim} but re/im shapes {re.shape}/{im.shape}")
    m = re + 1j * im
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix JSON contains non-finite entries")
    return m
