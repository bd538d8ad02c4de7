"""Exactly solvable pure-dephasing model of a CNOT gate in an Ohmic bath.

Gate Hamiltonian (hbar = 1)::

    H_G = -(R/4) (1 - sigma_z^c) (x) sigma_x^t  =  -(R/2) |1><1| (x) sigma_x

After ``t* = pi / R`` the control-1 sector has picked up ``i sigma_x``, so the
product input ``(|0> + |1>)|0> / sqrt(2)`` becomes ``(|00> + i|11>) / sqrt(2)``.

The bath couples through a system operator ``S`` that commutes with ``H_G``.
In the common eigenbasis ``{|00>, |01>, |1+>, |1->}`` each density-matrix
element evolves independently::

    rho_mn(t) = rho_mn(0) exp(-i (e_m - e_n) t) exp(i (s_m^2 - s_n^2) phi(t))
                exp(-(s_m - s_n)^2 Gamma(t))

with ``J(w) = K w exp(-w / w_c)`` and::

    Gamma(t) = int_0^inf J(w) coth(beta w / 2) (1 - cos w t) / w^2 dw
    phi(t)   = int_0^inf J(w) (w t - sin w t) / w^2 dw
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from . import __version__
from .errors import DomainError, InvariantViolation, NotBracketed, QuadratureFailure
from .linalg import IDENTITY2, SIGMA_X, SIGMA_Z, dagger, hermitian_eigensystem, tensor
from .measures import concurrence, eof_from_concurrence, fidelity_to_pure
from .mems import eof_upper_bound, normalize_spectrum

QUAD_RTOL = 1e-10
BOUND_TOL = 1e-9
FLOOR_TOL = 1e-12

_S2 = 1.0 / math.sqrt(2.0)
# Columns: |00>, |01>, |1+>, |1->.
EIGENBASIS = np.array(
    [
        [1, 0, 0, 0],
        [0, 1, 0, 0],
        [0, 0, _S2, _S2],
        [0, 0, _S2, -_S2],
    ],
    dtype=complex,
)


class CouplingKind(str, Enum):
    CONTROL = "control"
    GATE_AXIS = "gate-axis"

    @property
    def branch_values(self) -> np.ndarray:
        """Eigenvalues of the coupling operator on ``EIGENBASIS``."""
        if self is CouplingKind.CONTROL:
            return np.array([-1.0, -1.0, 1.0, 1.0])
        return np.array([0.0, 0.0, -1.0, 1.0])

    def operator(self) -> np.ndarray:
        if self is CouplingKind.CONTROL:
            return -tensor(SIGMA_Z, IDENTITY2)
        return -0.5 * tensor(IDENTITY2 - SIGMA_Z, SIGMA_X)


@dataclass(frozen=True)
class GateSpec:
    rabi_rate: float = 1.0

    def __post_init__(self):
        if not self.rabi_rate > 0:
            raise DomainError(f"rabi_rate must be positive, got {self.rabi_rate}")

    @property
    def gate_time(self) -> float:
        return math.pi / self.rabi_rate

    @property
    def energies(self) -> np.ndarray:
        r = self.rabi_rate
        return np.array([0.0, 0.0, -0.5 * r, 0.5 * r])

    def hamiltonian(self) -> np.ndarray:
        return -0.25 * self.rabi_rate * tensor(IDENTITY2 - SIGMA_Z, SIGMA_X)


@dataclass(frozen=True)
class BathSpec:
    coupling: float = 0.0
    cutoff: float = 1.0
    beta: float = math.inf

    def __post_init__(self):
        if not self.coupling >= 0:
            raise DomainError(f"coupling K must be >= 0, got {self.coupling}")
        if not self.cutoff > 0:
            raise DomainError(f"cutoff must be positive, got {self.cutoff}")
        if not self.beta > 0:
            raise DomainError(f"beta must be positive (or inf), got {self.beta}")


def _quad(f, label: str) -> float:
    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            # Split off the tail; the integrands carry exp(-x).
            for a, b in ((0.0, 60.0), (60.0, math.inf)):
                val, err = quad(f, a, b, epsabs=0.0, epsrel=QUAD_RTOL, limit=5000)
                if err > QUAD_RTOL * abs(val) + 1e-300 and err > 1e-14 * max(abs(total), 1e-300):
                    raise QuadratureFailure(f"{label}: error estimate {err:.2e} on |value| {abs(val):.2e}")
                total += val
        except IntegrationWarning as exc:
            raise QuadratureFailure(f"{label}: {exc}") from exc
    return total


def gamma_quadrature(t: float, cutoff: float, beta: float) -> float:
    """``Gamma(t)`` per unit coupling, by adaptive quadrature in ``x = w / w_c``."""
    c = cutoff * t
    b = beta * cutoff
    if c == 0:
        return 0.0

    def f(x):
        if x == 0.0:
            # Limit of coth(bx/2) * 2 sin^2(cx/2) / x; finite at any temperature.
            return 0.0 if math.isinf(b) else c * c / b
        thermal = 1.0 if math.isinf(b) else 1.0 / math.tanh(0.5 * b * x)
        return math.exp(-x) * thermal * 2.0 * math.sin(0.5 * c * x) ** 2 / x

    return _quad(f, "Gamma")


def phi_quadrature(t: float, cutoff: float) -> float:
    c = cutoff * t
    if c == 0:
        return 0.0

    def f(x):
        if x < 1e-4:
            # c x - sin(c x) ~ (c x)^3 / 6
            return math.exp(-x) * (c * x) ** 3 / 6.0 / x * (1.0 - (c * x) ** 2 / 20.0)
        return math.exp(-x) * (c * x - math.sin(c * x)) / x

    return _quad(f, "phi")


@lru_cache(maxsize=4096)
def _unit_decoherence(t: float, cutoff: float, beta: float, method: str) -> tuple[float, float]:
    c = cutoff * t
    if method == "quad":
        return gamma_quadrature(t, cutoff, beta), phi_quadrature(t, cutoff)
    phi = c - math.atan(c)
    if math.isinf(beta):
        return 0.5 * math.log1p(c * c), phi
    return gamma_quadrature(t, cutoff, beta), phi


def decoherence_functions(t: float, bath: BathSpec, method: str = "auto") -> tuple[float, float]:
    """``(Gamma(t), phi(t))`` for the Ohmic bath.

    ``method="auto"`` uses the closed forms where they exist (Gamma at zero
    temperature, phi at any temperature since it does not depend on beta)
    and quadrature otherwise; ``method="quad"`` integrates both numerically.
    """
    if t < 0:
        raise DomainError(f"time must be >= 0, got {t}")
    if method not in ("auto", "quad"):
        raise ValueError(f"unknown method {method!r}")
    if bath.coupling == 0 or t == 0:
        return 0.0, 0.0
    g, p = _unit_decoherence(float(t), float(bath.cutoff), float(bath.beta), method)
    return bath.coupling * g, bath.coupling * p


def initial_state() -> np.ndarray:
    """``(|0> + |1>)_c (x) |0>_t / sqrt(2)`` as a density matrix."""
    psi = np.array([1, 0, 1, 0], dtype=complex) * _S2
    return np.outer(psi, psi.conj())


def ideal_output() -> np.ndarray:
    """State vector ``(|00> + i|11>) / sqrt(2)`` reached at ``t*`` without a bath."""
    return np.array([_S2, 0, 0, 1j * _S2])


def dephasing_factors(kind: CouplingKind, gate: GateSpec, bath: BathSpec, t: float) -> np.ndarray:
    kind = CouplingKind(kind)
    gamma, phi = decoherence_functions(t, bath)
    e = gate.energies
    s = kind.branch_values
    de = e[:, None] - e[None, :]
    ds2 = (s**2)[:, None] - (s**2)[None, :]
    ds = s[:, None] - s[None, :]
    return np.exp(-1j * de * t + 1j * ds2 * phi - ds**2 * gamma)


def evolve(initial: np.ndarray, kind: CouplingKind, gate: GateSpec, bath: BathSpec, t: float) -> np.ndarray:
    """Reduced gate state at time ``t``, evolved from ``initial`` at ``t = 0``."""
    rho0 = np.asarray(initial, dtype=complex)
    in_basis = dagger(EIGENBASIS) @ rho0 @ EIGENBASIS
    rho = EIGENBASIS @ (in_basis * dephasing_factors(kind, gate, bath, t)) @ dagger(EIGENBASIS)
    return 0.5 * (rho + dagger(rho))


@dataclass(frozen=True)
class TraceRow:
    time: float
    fidelity: float
    concurrence: float
    eof: float
    bound: float
    spectrum: tuple

    @property
    def within_bound(self) -> bool:
        return self.eof <= self.bound + BOUND_TOL


def state_row(rho: np.ndarray, t: float) -> TraceRow:
    c = concurrence(rho)
    values = hermitian_eigensystem(rho).values
    p, _ = normalize_spectrum(values)
    return TraceRow(
        time=float(t),
        fidelity=float(fidelity_to_pure(rho, ideal_output())),
        concurrence=float(c),
        eof=float(eof_from_concurrence(c)),
        bound=eof_upper_bound(p),
        spectrum=tuple(float(x) for x in p),
    )


def trace_run(
    kind: CouplingKind,
    gate: GateSpec,
    bath: BathSpec,
    n_steps: int,
    initial: np.ndarray | None = None,
) -> list[TraceRow]:
    """Rows at ``n_steps`` uniform times on ``[0, t*]``."""
    if n_steps < 2:
        raise DomainError(f"n_steps must be >= 2, got {n_steps}")
    rho0 = initial_state() if initial is None else initial
    times = np.linspace(0.0, gate.gate_time, n_steps)
    return [state_row(evolve(rho0, kind, gate, bath, t), t) for t in times]


def final_fidelity(kind: CouplingKind, gate: GateSpec, bath: BathSpec) -> float:
    rho = evolve(initial_state(), kind, gate, bath, gate.gate_time)
    return float(fidelity_to_pure(rho, ideal_output()))


def fidelity_floor(kind: CouplingKind) -> float:
    """Fidelity of the fully dephased output (all cross-branch coherences lost)."""
    kind = CouplingKind(kind)
    s = kind.branch_values
    a = dagger(EIGENBASIS) @ ideal_output()
    w = np.abs(a) ** 2
    same = (s[:, None] == s[None, :]).astype(float)
    return float(w @ same @ w)


def calibrate_coupling(
    kind: CouplingKind,
    gate: GateSpec,
    bath_template: BathSpec,
    target_fidelity: float,
) -> float:
    """Coupling ``K`` whose final fidelity equals ``target_fidelity``.

    Brackets the crossing by doubling ``K`` and then bisects, relying on the
    fidelity decreasing in ``K`` inside the bracket.  Targets at or below
    the fully dephased fidelity are rejected: the control fidelity only
    approaches that floor, and the gate-axis fidelity oscillates around it
    at strong coupling because of the ``cos(phi)`` factor.
    """
    kind = CouplingKind(kind)
    if not 0.0 < target_fidelity <= 1.0:
        raise DomainError(f"target fidelity must lie in (0, 1], got {target_fidelity}")
    if target_fidelity == 1.0:
        return 0.0
    floor = fidelity_floor(kind)
    if target_fidelity <= floor + FLOOR_TOL:
        raise NotBracketed(
            f"target fidelity {target_fidelity} is not above the fully dephased floor {floor:.6g}"
        )

    def fid(k: float) -> float:
        return final_fidelity(kind, gate, replace(bath_template, coupling=k))

    lo, hi = 0.0, 1e-3
    while fid(hi) >= target_fidelity:
        lo, hi = hi, 2.0 * hi
        if hi > 1e6:
            raise NotBracketed(
                f"fidelity {target_fidelity} not reached for K up to 1e6 "
                f"(fully dephased floor {fidelity_floor(kind):.6g})"
            )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if fid(mid) >= target_fidelity:
            lo = mid
        else:
            hi = mid
    k = lo if abs(fid(lo) - target_fidelity) <= abs(fid(hi) - target_fidelity) else hi
    return k


TRACE_COLUMNS = ("t", "fidelity", "concurrence", "eof", "eof_bound", "p1", "p2", "p3", "p4")


def format_trace_csv(rows: list[TraceRow], manifest: dict) -> str:
    buf = io.StringIO()
    buf.write(f"# entlab {__version__} cnot\n")
    buf.write("# manifest: " + json.dumps(manifest, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for r in rows:
        w.writerow([f"{x:.12g}" for x in (r.time, r.fidelity, r.concurrence, r.eof, r.bound, *r.spectrum)])
    return buf.getvalue()


def check_rows(rows: list[TraceRow]) -> None:
    bad = [r for r in rows if not r.within_bound]
    if bad:
        r = bad[0]
        raise InvariantViolation(f"EOF {r.eof:.12g} exceeds spectrum bound {r.bound:.12g} at t={r.time:.6g}")
