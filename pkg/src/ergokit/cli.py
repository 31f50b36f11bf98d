"""Command-line front end: ``ergokit <command> ...``.

Results go to standard output (or ``--output``) as JSON or CSV. Validation
errors exit with status 1 and a one-line JSON error on standard error; a
failing ``verify`` run exits with status 2.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import curves, ergotropy, oracle, protocols
from .spectrum import Spectrum, qutrit_spectrum
from .state import state_from_json

SEED_ENV = "ERGOKIT_SEED"


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --- input helpers ---------------------------------------------------------

def load_spectrum(src: str) -> Spectrum:
    """Inline JSON array, or a path to a JSON/CSV file."""
    text = src.strip()
    if text.startswith("["):
        return Spectrum.from_json(text)
    path = Path(src)
    if not path.is_file():
        raise UsageError(f"spectrum source {src!r} is neither a JSON array nor a readable file")
    return Spectrum.parse(path.read_text())


def _read_text(src: str) -> str:
    path = Path(src)
    if path.is_file():
        return path.read_text()
    text = src.strip()
    if text.startswith("[") or text.startswith("{"):
        return text
    raise UsageError(f"{src!r} is neither inline JSON nor a readable file")


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _qutrit_params(spec: Spectrum) -> tuple[float, float]:
    """Recover (eps, delta) from levels (0, (1+delta)*eps, 2*eps)."""
    if spec.dim != 3 or spec.eps_min != 0.0 or spec.eps_max <= 0.0:
        raise UsageError("builtin:qutrit-opt needs a qutrit spectrum of the form [0, (1+delta)*eps, 2*eps]")
    eps = spec.eps_max / 2.0
    return eps, spec.levels[1] / eps - 1.0


def load_channel(src: str, spec: Spectrum, E: float):
    if src == "builtin:rev":
        return protocols.u_rev(spec.dim)
    if src == "builtin:qutrit-opt":
        eps, delta = _qutrit_params(spec)
        return protocols.qutrit_diag_optimal_unitary(eps, delta, E)
    if src.startswith("builtin:"):
        raise UsageError(f"unknown builtin channel {src!r}")
    return protocols.channel_from_json(_read_text(src))


# --- output ----------------------------------------------------------------

def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if v is None else repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def emit(payload, rows: list[dict] | None, fmt: str, output: str | None) -> None:
    if fmt == "csv":
        if rows is None:
            raise UsageError("this command has no CSV form; use --format json")
        text = to_csv(rows)
    else:
        text = json.dumps(payload) + "\n"
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


# --- commands --------------------------------------------------------------

def cmd_curve(args):
    spec = load_spectrum(args.spectrum)
    curve = curves.min_ergotropy_curve(spec) if args.mode == "extract" else curves.min_anti_ergotropy_curve(spec)
    rows = [{"E": e, "value": v} for e, v in curve.breakpoints]
    return {"breakpoints": [[e, v] for e, v in curve.breakpoints]}, rows


def eval_row(spec: Spectrum, E: float) -> dict:
    E = spec.check_energy(E)
    ce, ca = curves.coherent_max(spec, E)
    interior = spec.eps_min < E < spec.eps_max
    return {
        "E": E,
        "min_ergotropy": curves.min_ergotropy(spec, E),
        "min_anti_ergotropy": curves.min_anti_ergotropy(spec, E),
        "max_ergotropy": curves.max_ergotropy(spec, E),
        "max_anti_ergotropy": curves.max_anti_ergotropy(spec, E),
        "coherent_ergotropy_max": ce,
        "coherent_anti_ergotropy_max": ca,
        "pinsker_extract": _num(protocols.pinsker_lower_bound(spec, E, "extract")) if interior else None,
        "pinsker_inject": _num(protocols.pinsker_lower_bound(spec, E, "inject")) if interior else None,
    }


def cmd_eval(args):
    spec = load_spectrum(args.spectrum)
    for E in args.energy:
        spec.check_energy(E)
    rows = [eval_row(spec, E) for E in args.energy]
    return (rows[0] if len(rows) == 1 else rows), rows


def cmd_ergotropy(args):
    spec = load_spectrum(args.spectrum)
    rho = state_from_json(_read_text(args.state))
    rep = ergotropy.report(rho, spec).to_dict()
    return rep, [rep]


def cmd_protocol(args):
    spec = load_spectrum(args.spectrum)
    results, rows = [], []
    for E in args.energy:
        E = spec.check_energy(E)
        channel = load_channel(args.channel, spec, E)
        res = protocols.worst_case_delta_E(channel, spec, E, args.mode)
        bound = curves.min_ergotropy(spec, E) if args.mode == "extract" else curves.min_anti_ergotropy(spec, E)
        d = res.to_dict()
        d["upper_bound"] = bound
        results.append(d)
        rows.append({"E": E, "value": res.value, "dual_multiplier": res.dual_multiplier, "upper_bound": bound})
    return (results[0] if len(results) == 1 else results), rows


def qutrit_rows(eps: float, delta: float, energies) -> list[dict]:
    spec = qutrit_spectrum(eps, delta)
    rows = []
    for E in energies:
        E = spec.check_energy(E)
        rows.append({
            "E": E,
            "min_ergotropy": curves.min_ergotropy(spec, E),
            "worst_rev": protocols.qutrit_worst_rev(eps, delta, E),
            "worst_diag_optimal": protocols.qutrit_min_diag_optimal(eps, delta, E),
        })
    return rows


def cmd_qutrit(args):
    spec = qutrit_spectrum(args.eps, args.delta)
    if args.energy:
        energies = args.energy
    else:
        if args.grid < 2:
            raise UsageError("--grid must be >= 2")
        energies = np.linspace(spec.eps_min, spec.eps_max, args.grid).tolist()
    rows = qutrit_rows(args.eps, args.delta, energies)
    return {"eps": args.eps, "delta": args.delta, "rows": rows}, rows


def cmd_verify(args):
    reports = oracle.run_suite(seed=args.seed, n_spectra=args.spectra)
    rows = [r.to_dict() for r in reports]
    return {"reports": rows, "passed": all(r.passed for r in reports)}, rows


# --- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ergokit", description="Energy-constrained ergotropy toolkit.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, spectrum=True):
        if spectrum:
            sp.add_argument("--spectrum", required=True, help="inline JSON array or JSON/CSV file")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--output", help="write here instead of standard output")

    sp = sub.add_parser("curve", help="minimum ergotropy / anti-ergotropy breakpoints")
    common(sp)
    sp.add_argument("--mode", choices=("extract", "inject"), default="extract")
    sp.set_defaults(func=cmd_curve)

    sp = sub.add_parser("eval", help="all energy-constrained bounds at given energies")
    common(sp)
    sp.add_argument("--energy", type=float, nargs="+", required=True)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("ergotropy", help="ergotropy report of a state")
    common(sp)
    sp.add_argument("--state", required=True, help="density matrix or population JSON (inline or file)")
    sp.set_defaults(func=cmd_ergotropy)

    sp = sub.add_parser("protocol", help="worst-case energy change of a channel")
    common(sp)
    sp.add_argument("--energy", type=float, nargs="+", required=True)
    sp.add_argument("--channel", required=True, help="channel JSON, builtin:rev or builtin:qutrit-opt")
    sp.add_argument("--mode", choices=("extract", "inject"), default="extract")
    sp.set_defaults(func=cmd_protocol)

    sp = sub.add_parser("qutrit", help="qutrit protocol curves on an energy grid")
    common(sp, spectrum=False)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--grid", type=int, default=101)
    sp.add_argument("--energy", type=float, nargs="+", help="explicit energies instead of a grid")
    sp.set_defaults(func=cmd_qutrit)

    sp = sub.add_parser("verify", help="run the oracle suite")
    common(sp, spectrum=False)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--spectra", type=int, default=50)
    sp.set_defaults(func=cmd_verify)
    return p


def _fail(exc: BaseException) -> int:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
    return 1


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "seed", 0) is None:
            args.seed = default_seed()
        if getattr(args, "spectra", 1) < 1:
            raise UsageError("--spectra must be >= 1")
        payload, rows = args.func(args)
        emit(payload, rows, args.format, args.output)
    except (ValueError, ArithmeticError, KeyError, TypeError, OSError) as exc:
        return _fail(exc)
    if args.command == "verify" and not payload["passed"]:
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
