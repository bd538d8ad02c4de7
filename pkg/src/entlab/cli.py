"""Command-line interface: ``entlab measure | mems | scan | cnot | selftest``.

Exit codes: 0 on success, 1 on a domain error (bad state, bad spectrum,
failed criterion), 2 on a usage error.  Seeds are never taken from the
environment.  Nothing is written to disk except the file named by ``--out``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .acceptance import FAULTS, AcceptanceSuite, injected_fault
from .cnot import (
    BathSpec,
    CouplingKind,
    GateSpec,
    calibrate_coupling,
    check_rows,
    format_trace_csv,
    trace_run,
)
from .errors import EntlabError
from .linalg import matrix_from_json, matrix_to_json
from .measures import measure_report
from .mems import MemsVariant, build_mems, c_star, eof_upper_bound, neg_star, special_condition
from .orbit import MeasureKind, ScanConfig, format_scan_csv, scan, scan_manifest


def _g12(x: float) -> float:
    """Round to 12 significant digits so printed output is stable."""
    return float(f"{x:.12g}")


def _rounded(obj):
    if isinstance(obj, dict):
        return {k: _rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return _g12(float(obj))
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _emit_json(obj: dict, out: str | None = None) -> None:
    _emit(json.dumps(_rounded(obj), indent=2, sort_keys=True) + "\n", out)


def _spectrum_arg(text: str) -> list[float]:
    try:
        values = [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected four comma-separated numbers, got {text!r}")
    if len(values) != 4:
        raise argparse.ArgumentTypeError(f"expected four comma-separated numbers, got {len(values)}")
    return values


def _beta_arg(text: str) -> float:
    if text.strip().lower() in ("inf", "infinity"):
        return math.inf
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'inf', got {text!r}")


def _positive_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {n}")
    return n


def _nonnegative_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if n < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {n}")
    return n


def cmd_measure(args) -> int:
    with open(args.input) as fh:
        rho = matrix_from_json(json.load(fh))
    _emit_json(measure_report(rho).to_dict(), args.out)
    return 0


def cmd_mems(args) -> int:
    variant = MemsVariant(form=args.variant)
    rho = build_mems(args.p, variant)
    sc = special_condition(args.p)
    report = {
        "spectrum": list(args.p),
        "variant": args.variant,
        "c_star": c_star(args.p).clipped,
        "c_star_raw": c_star(args.p).raw,
        "negativity_star": neg_star(args.p).clipped,
        "negativity_star_raw": neg_star(args.p).raw,
        "eof_upper_bound": eof_upper_bound(args.p),
        "special_condition": sc.satisfied,
        "measures": measure_report(rho).to_dict(),
        "matrix": matrix_to_json(rho),
    }
    _emit_json(report, args.out)
    return 0


def cmd_scan(args) -> int:
    config = ScanConfig(args.spectra, args.unitaries, args.refine, args.measure, args.seed)
    results = scan(config, workers=args.streams)
    _emit(format_scan_csv(results, scan_manifest(config)), args.out)
    return 0


def cmd_cnot(args) -> int:
    kind = CouplingKind(args.coupling)
    gate = GateSpec(args.R)
    beta = args.beta if args.beta is not None else 10.0 / args.wc
    bath = BathSpec(args.K, args.wc, beta)
    if args.calibrate is not None:
        k = calibrate_coupling(kind, gate, bath, args.calibrate)
        print(f"{k:.12g}")
        if args.out is None:
            return 0
        bath = BathSpec(k, args.wc, beta)
    rows = trace_run(kind, gate, bath, args.steps)
    check_rows(rows)
    manifest = {
        "subcommand": "cnot",
        "version": __version__,
        "coupling": kind.value,
        "K": bath.coupling,
        "wc": bath.cutoff,
        "beta": "inf" if math.isinf(beta) else beta,
        "R": gate.rabi_rate,
        "steps": args.steps,
        "target_fidelity": args.calibrate,
    }
    _emit(format_trace_csv(rows, manifest), args.out)
    return 0


def cmd_selftest(args) -> int:
    suite = AcceptanceSuite(fast=args.fast)
    with injected_fault(args.fault):
        results = suite.run_all(report=lambda r: print(r.line(), flush=True))
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed" + (f"; failed: {failed}" if failed else ""))
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="entlab", description="Two-qubit entanglement lab.")
    parser.add_argument("--version", action="version", version=f"entlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="{measure,mems,scan,cnot,selftest}")

    p = sub.add_parser("measure", help="entanglement and mixedness of a density matrix (JSON)")
    p.add_argument("--input", required=True, help="matrix JSON file with keys dim, re, im")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("mems", help="build the maximally entangled mixed state for a spectrum")
    p.add_argument("--p", required=True, type=_spectrum_arg, help="p1,p2,p3,p4 sorted descending, summing to 1")
    p.add_argument("--variant", choices=("psi", "phi"), default="psi")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.set_defaults(func=cmd_mems)

    p = sub.add_parser("scan", help="maximize a measure over unitary orbits of random spectra")
    p.add_argument("--spectra", type=_positive_int, required=True)
    p.add_argument("--unitaries", type=_positive_int, required=True, help="Haar samples per spectrum")
    p.add_argument("--refine", type=_nonnegative_int, default=0, help="local refinement proposals per start")
    p.add_argument("--measure", choices=[k.value for k in MeasureKind], default=MeasureKind.CONCURRENCE.value)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--streams", type=_positive_int, default=1, help="worker processes (output does not depend on it)")
    p.add_argument("--out", help="CSV output path (stdout if omitted)")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("cnot", help="decohered CNOT gate trace")
    p.add_argument("--coupling", choices=[k.value for k in CouplingKind], required=True)
    p.add_argument("--K", type=float, default=0.0, help="coupling strength")
    p.add_argument("--wc", type=float, default=1.0, help="bath cutoff frequency")
    p.add_argument("--beta", type=_beta_arg, default=None, help="inverse temperature or 'inf' (default 10/wc)")
    p.add_argument("--R", type=float, default=1.0, help="Rabi rate; gate time is pi/R")
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--calibrate", type=float, metavar="FIDELITY", help="print the K reaching this final fidelity")
    p.add_argument("--out", help="trace CSV output path (stdout if omitted)")
    p.set_defaults(func=cmd_cnot)

    p = sub.add_parser("selftest", help="run the acceptance suite")
    p.add_argument("--fast", action="store_true", help="reduced sample counts, same tolerances")
    p.add_argument("--fault", choices=sorted(FAULTS), help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (EntlabError, ValueError, OSError) as exc:
        print(f"entlab {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
