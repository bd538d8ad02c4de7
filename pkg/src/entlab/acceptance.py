"""Desk-scale acceptance suite, shared by ``entlab selftest`` and the test suite.

Each criterion returns a :class:`CriterionResult`.  Seeds are fixed
constants so every run is reproducible; ``fast=True`` shrinks the sample
counts but keeps the tolerances.
"""

from __future__ import annotations

import contextlib
import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import measures
from .cnot import (
    BathSpec,
    CouplingKind,
    GateSpec,
    calibrate_coupling,
    decoherence_functions,
    format_trace_csv,
    trace_run,
)
from .ensembles import RngStream, sample_cue, sample_density, sample_spectrum
from .linalg import eigvalsh
from .mems import ALL_VARIANTS, build_mems, build_werner, special_condition, werner_spectrum
from .orbit import (
    ENVELOPE_TOL,
    RANK_BOUND_SLACK,
    MeasureKind,
    ScanConfig,
    format_scan_csv,
    scan,
    scan_manifest,
    verify_rank_bounds,
)

SEED = 20240611
# Independent high-precision value of h((1 + sqrt(3)/2) / 2), the EOF at C = 1/2.
EOF_AT_HALF = 0.354578902665269884
ZERO_TOL = 1e-12
CALIBRATION_TARGETS = (0.95, 0.9, 0.8)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    budget_seconds: float | None = None

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        budget = f" / {self.budget_seconds:g} s" if self.budget_seconds else ""
        return f"[{status}] {self.number}. {self.name} ({self.seconds:.2f} s{budget}): {self.detail}"


@dataclass
class Sizes:
    mems_spectra: int = 10_000
    scan_spectra: int = 1000
    scan_unitaries: int = 10_000
    rank_cases: int = 100
    special_spectra: int = 1000
    random_states: int = 100_000
    eig_matrices: int = 1000
    haar_samples: int = 100_000
    trace_steps: int = 200

    @classmethod
    def fast(cls) -> "Sizes":
        return cls(
            mems_spectra=1000,
            scan_spectra=50,
            scan_unitaries=2000,
            rank_cases=10,
            special_spectra=200,
            random_states=10_000,
            eig_matrices=200,
            haar_samples=20_000,
            trace_steps=50,
        )


def _check(ok: bool, failures: list[str], msg: str) -> None:
    if not ok:
        failures.append(msg)


def _verdict(failures: list[str], summary: str) -> tuple[bool, str]:
    if failures:
        return False, "; ".join(failures[:5]) + (f" (+{len(failures) - 5} more)" if len(failures) > 5 else "")
    return True, summary


def _charpoly(h: np.ndarray) -> np.ndarray:
    """Characteristic polynomial coefficients from power traces (Newton identities)."""
    n = h.shape[-1]
    traces = [np.trace(np.linalg.matrix_power(h, k)).real for k in range(1, n + 1)]
    e = [1.0]
    for k in range(1, n + 1):
        e.append(sum((-1) ** (i - 1) * e[k - i] * traces[i - 1] for i in range(1, k + 1)) / k)
    return np.array([(-1) ** k * e[k] for k in range(n + 1)])


@dataclass
class AcceptanceSuite:
    fast: bool = False
    sizes: Sizes = field(default=None)
    _scan_outputs: dict | None = field(default=None, repr=False)
    _cnot_outputs: dict | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.sizes is None:
            self.sizes = Sizes.fast() if self.fast else Sizes()

    # -- criterion 1 ---------------------------------------------------------
    def measure_oracles(self) -> tuple[bool, str]:
        s2 = 1 / np.sqrt(2)
        singlet = np.array([0, s2, -s2, 0])
        cases = {
            "singlet": (np.outer(singlet, singlet), (1.0, 1.0, 1.0)),
            "I/4": (np.eye(4) / 4, (0.0, 0.0, 0.0)),
            "|00>": (np.diag([1.0, 0, 0, 0]), (0.0, 0.0, 0.0)),
            "|+0>": (np.outer([s2, 0, s2, 0], [s2, 0, s2, 0]), (0.0, 0.0, 0.0)),
            "I/2 x |1><1|": (np.diag([0, 0.5, 0, 0.5]), (0.0, 0.0, 0.0)),
        }
        failures: list[str] = []
        for name, (rho, (c, e, n)) in cases.items():
            got = (measures.concurrence(rho), measures.eof(rho), measures.negativity(rho))
            for label, g, want in zip(("C", "EOF", "N"), got, (c, e, n)):
                _check(abs(g - want) <= 1e-8, failures, f"{name} {label}={g:.12g} want {want}")
        w = build_werner(0.75)
        c, e = measures.concurrence(w), measures.eof(w)
        _check(abs(c - 0.5) <= 1e-8, failures, f"Werner C={c:.12g} want 0.5")
        _check(abs(e - EOF_AT_HALF) <= 1e-6, failures, f"Werner EOF={e:.12g} want {EOF_AT_HALF:.12g}")
        return _verdict(failures, f"{len(cases) + 1} reference states, Werner EOF={e:.9f}")

    # -- criterion 2 ---------------------------------------------------------
    def mems_tightness(self) -> tuple[bool, str]:
        p = sample_spectrum(RngStream(SEED, 2), size=self.sizes.mems_spectra)
        rho = np.stack([build_mems(q, ALL_VARIANTS[i % len(ALL_VARIANTS)]) for i, q in enumerate(p)])
        c = measures.concurrence(rho)
        n = measures.negativity(rho)
        c_want = np.maximum(0, p[:, 0] - p[:, 2] - 2 * np.sqrt(p[:, 1] * p[:, 3]))
        n_want = np.maximum(0, -p[:, 1] - p[:, 3] + np.hypot(p[:, 0] - p[:, 2], p[:, 1] - p[:, 3]))
        ec, en = np.abs(c - c_want).max(), np.abs(n - n_want).max()
        failures: list[str] = []
        _check(ec <= 1e-10, failures, f"max concurrence error {ec:.3e}")
        _check(en <= 1e-10, failures, f"max negativity error {en:.3e}")
        return _verdict(failures, f"{len(p)} spectra, max errors C {ec:.1e}, N {en:.1e}")

    # -- criterion 3 ---------------------------------------------------------
    def scan_outputs(self) -> dict:
        """CSV text of the seeded envelope scans, one per measure."""
        out = {}
        for kind in MeasureKind:
            cfg = ScanConfig(self.sizes.scan_spectra, self.sizes.scan_unitaries, 0, kind, SEED)
            results = scan(cfg)
            out[kind.value] = (results, format_scan_csv(results, scan_manifest(cfg)))
        return out

    def envelope(self) -> tuple[bool, str]:
        if self._scan_outputs is None:
            self._scan_outputs = self.scan_outputs()
        failures: list[str] = []
        parts = []
        for kind, (rows, _) in self._scan_outputs.items():
            star = np.array([r.c_star_raw if kind == "concurrence" else r.neg_star_raw for r in rows])
            best = np.array([r.best_value for r in rows])
            pr = np.array([r.participation_ratio for r in rows])
            above = int(np.sum(best > np.maximum(0.0, star) + ENVELOPE_TOL))
            mixed = pr >= 3
            nonzero = int(np.sum(best[mixed] > ZERO_TOL))
            _check(above == 0, failures, f"{kind}: {above} rows above envelope")
            _check(nonzero == 0, failures, f"{kind}: {nonzero} rows with R >= 3 and nonzero value")
            parts.append(f"{kind} max excess {np.max(best - np.maximum(0, star)):.2e}, {int(mixed.sum())} rows R>=3")
        n = self.sizes.scan_spectra
        return _verdict(failures, f"{n} x {self.sizes.scan_unitaries}; " + "; ".join(parts))

    # -- criterion 4 ---------------------------------------------------------
    def rank_bounds(self) -> tuple[bool, str]:
        rows = verify_rank_bounds(self.sizes.rank_cases, RngStream(SEED, 4))
        failures: list[str] = []
        for r in rows:
            _check(r.worst_excess <= ENVELOPE_TOL, failures, f"rank {r.rank} exceeds bound by {r.worst_excess:.3e}")
            _check(
                r.worst_shortfall <= RANK_BOUND_SLACK,
                failures,
                f"rank {r.rank} falls {r.worst_shortfall:.3e} short at p={r.spectrum_at_shortfall}",
            )
        detail = ", ".join(f"rank {r.rank}: shortfall {r.worst_shortfall:.2e}, excess {r.worst_excess:.1e}" for r in rows)
        return _verdict(failures, f"{self.sizes.rank_cases} cases per rank; {detail}")

    # -- criterion 5 ---------------------------------------------------------
    def special_condition(self) -> tuple[bool, str]:
        g = RngStream(SEED, 5).generator
        failures: list[str] = []
        worst = 0.0
        kept = 0
        while kept < self.sizes.special_spectra:
            p2, p4 = np.sort(g.uniform(0, 1, 2))[::-1]
            p3 = p2 + p4 - np.sqrt(p2 * p4)
            p1 = p2 + g.uniform(0, 1)
            p = np.array([p1, p2, p3, p4])
            p /= p.sum()
            if not np.all(np.diff(p) <= 0):
                continue
            kept += 1
            sc = special_condition(p)
            worst = max(worst, abs(sc.rho4_purity - 1 / 3))
            _check(sc.satisfied, failures, f"constructed spectrum {p} fails the condition")
        _check(worst <= 1e-10, failures, f"rho4 purity off 1/3 by {worst:.3e}")
        for p1 in np.linspace(0.25, 1.0, 31):
            _check(special_condition(werner_spectrum(p1)).satisfied, failures, f"Werner p1={p1:.4f} fails")
        return _verdict(failures, f"{kept} spectra, max |purity - 1/3| {worst:.1e}; 31 Werner spectra")

    # -- criterion 6 ---------------------------------------------------------
    def purity_ppt(self) -> tuple[bool, str]:
        rs = RngStream(SEED, 6)
        n = self.sizes.random_states
        p = sample_spectrum(rs.substream(0), size=n)
        rho = sample_density(rs.substream(1), p, size=n)
        c = measures.concurrence(rho)
        neg = measures.negativity(rho)
        pur = measures.purity(rho)
        failures: list[str] = []
        low = pur <= measures.PURITY_SEPARABLE
        bad_purity = int(np.sum(low & ((c > 1e-8) | (neg > 1e-8))))
        inconsistent = int(np.sum(((c > 1e-8) & (neg <= 0)) | ((neg > 1e-8) & (c <= 0))))
        _check(bad_purity == 0, failures, f"{bad_purity} states with purity <= 1/3 are entangled")
        _check(inconsistent == 0, failures, f"{inconsistent} states where concurrence and negativity disagree")
        return _verdict(
            failures,
            f"{n} states, {int(low.sum())} with purity <= 1/3, {int(np.sum(c > 0))} entangled, no sign mismatch",
        )

    # -- criterion 7 ---------------------------------------------------------
    def cnot_outputs(self) -> dict:
        """Calibrated couplings, trace rows and CSV text for every coupling and target."""
        gate = GateSpec(1.0)
        template = BathSpec(0.0, 1.0, 10.0)
        out = {}
        for kind in CouplingKind:
            for target in (1.0, *CALIBRATION_TARGETS):
                k = calibrate_coupling(kind, gate, template, target)
                bath = replace(template, coupling=k)
                rows = trace_run(kind, gate, bath, self.sizes.trace_steps)
                manifest = {
                    "subcommand": "cnot",
                    "coupling": kind.value,
                    "K": k,
                    "wc": bath.cutoff,
                    "beta": bath.beta,
                    "R": gate.rabi_rate,
                    "steps": self.sizes.trace_steps,
                    "target_fidelity": target,
                }
                out[(kind.value, target)] = (k, rows, format_trace_csv(rows, manifest))
        return out

    def cnot(self) -> tuple[bool, str]:
        if self._cnot_outputs is None:
            self._cnot_outputs = self.cnot_outputs()
        out = self._cnot_outputs
        failures: list[str] = []
        for kind in CouplingKind:
            _, rows, _ = out[(kind.value, 1.0)]
            last = rows[-1]
            _check(abs(last.eof - 1) <= 1e-10, failures, f"{kind.value} K=0 final EOF {last.eof:.12g}")
            _check(abs(last.fidelity - 1) <= 1e-10, failures, f"{kind.value} K=0 final fidelity {last.fidelity:.12g}")
        gaps = []
        for target in CALIBRATION_TARGETS:
            gap = {}
            for kind in CouplingKind:
                _, rows, _ = out[(kind.value, target)]
                last = rows[-1]
                _check(
                    abs(last.fidelity - target) <= 1e-6,
                    failures,
                    f"{kind.value} calibrated fidelity {last.fidelity:.12g} vs {target}",
                )
                nbad = sum(not r.within_bound for r in rows)
                _check(nbad == 0, failures, f"{kind.value} F={target}: {nbad} rows above the EOF bound")
                gap[kind] = last.bound - last.eof
            _check(
                gap[CouplingKind.GATE_AXIS] < gap[CouplingKind.CONTROL],
                failures,
                f"F={target}: gate-axis gap {gap[CouplingKind.GATE_AXIS]:.6g} not below control gap "
                f"{gap[CouplingKind.CONTROL]:.6g}",
            )
            gaps.append(f"F={target} gaps {gap[CouplingKind.GATE_AXIS]:.4f} < {gap[CouplingKind.CONTROL]:.4f}")
        return _verdict(failures, "; ".join(gaps))

    # -- criterion 8 ---------------------------------------------------------
    def numerics(self) -> tuple[bool, str]:
        failures: list[str] = []
        g = RngStream(SEED, 8).generator
        worst_eig = 0.0
        for _ in range(self.sizes.eig_matrices):
            a = g.standard_normal((4, 4)) + 1j * g.standard_normal((4, 4))
            h = 0.5 * (a + a.conj().T)
            roots = np.sort(np.roots(_charpoly(h)).real)[::-1]
            worst_eig = max(worst_eig, float(np.abs(roots - eigvalsh(h)).max()))
        _check(worst_eig <= 1e-10, failures, f"eigenvalues differ from polynomial roots by {worst_eig:.3e}")

        worst_dec = 0.0
        for c in (0.1, 0.5, 1.0, np.pi, 5.0, 10.0):
            bath = BathSpec(1.0, 1.0, 1e6)
            quad = np.array(decoherence_functions(c, bath, method="quad"))
            closed = np.array([0.5 * np.log1p(c * c), c - np.arctan(c)])
            worst_dec = max(worst_dec, float(np.abs(quad - closed).max()))
        _check(worst_dec <= 1e-6, failures, f"quadrature differs from closed forms by {worst_dec:.3e}")

        u = sample_cue(RngStream(SEED, 9).generator, size=self.sizes.haar_samples)
        haar = float(np.abs((np.abs(u) ** 2).mean(axis=0) - 0.25).max())
        _check(haar <= 0.005, failures, f"Haar second moment off by {haar:.4f}")
        return _verdict(
            failures,
            f"eig vs roots {worst_eig:.1e}; quad vs closed {worst_dec:.1e}; "
            f"max |E|U_ij|^2 - 1/4| {haar:.4f} at {self.sizes.haar_samples} samples",
        )

    # -- criterion 9 ---------------------------------------------------------
    def determinism(self) -> tuple[bool, str]:
        if self._scan_outputs is None:
            self._scan_outputs = self.scan_outputs()
        if self._cnot_outputs is None:
            self._cnot_outputs = self.cnot_outputs()
        failures: list[str] = []
        again = self.scan_outputs()
        for key, (_, text) in self._scan_outputs.items():
            _check(again[key][1] == text, failures, f"scan {key} output differs between runs")
        again = self.cnot_outputs()
        for key, (_, _, text) in self._cnot_outputs.items():
            _check(again[key][2] == text, failures, f"cnot {key} output differs between runs")
        n = len(self._scan_outputs) + len(self._cnot_outputs)
        return _verdict(failures, f"{n} output files byte-identical on rerun")

    CRITERIA: tuple = (
        (1, "measure oracle suite", "measure_oracles", 1),
        (2, "MEMS tightness", "mems_tightness", 30),
        (3, "orbit envelope scan", "envelope", 600),
        (4, "rank-bound attainment", "rank_bounds", 300),
        (5, "special-condition lemma", "special_condition", None),
        (6, "purity lemma and PPT consistency", "purity_ppt", None),
        (7, "CNOT simulator", "cnot", 60),
        (8, "numerics cross-checks", "numerics", None),
        (9, "determinism", "determinism", None),
    )

    def run(self, number: int) -> CriterionResult:
        num, name, method, budget = self.CRITERIA[number - 1]
        t0 = time.perf_counter()
        try:
            passed, detail = getattr(self, method)()
        except Exception as exc:  # a crash is a failed criterion, not a crashed suite
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        seconds = time.perf_counter() - t0
        if budget is not None and not self.fast and seconds > budget:
            passed, detail = False, f"over time budget; {detail}"
        return CriterionResult(num, name, passed, detail, seconds, budget)

    def run_all(self, report: Callable[[CriterionResult], None] | None = None) -> list[CriterionResult]:
        results = []
        for num, *_ in self.CRITERIA:
            r = self.run(num)
            if report is not None:
                report(r)
            results.append(r)
        return results


def _broken_spin_flip(rho):
    # Drops the Y x Y conjugation: a deliberately wrong spin flip.
    return np.conj(np.asarray(rho, dtype=complex))


FAULTS = {"spin-flip": ("spin_flip", _broken_spin_flip)}


@contextlib.contextmanager
def injected_fault(name: str | None):
    """Temporarily replace a measures function with a broken version (testing hook)."""
    if name is None:
        yield
        return
    attr, broken = FAULTS[name]
    original = getattr(measures, attr)
    setattr(measures, attr, broken)
    try:
        yield
    finally:
        setattr(measures, attr, original)
