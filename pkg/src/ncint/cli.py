"""Command line entry points: verify suites, probe the continuum limit,
generate measures, and pretty-print stored reports.

Reports append to JSONL files named by the suite selection and a hash of
the fully resolved configuration, so reruns with one configuration land
in one file and differently configured runs never collide.  Every byte
of a report line except the timestamp inside "metadata" is a pure
function of the configuration.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional, Sequence

from . import __version__
from .errors import ConfigError, MeasureError, NcintError
from .exactalg import MatrixP
from .lattice import (
    ResidualReport,
    backlund_residual,
    discrete_compatibility_residual,
    discrete_toda_residual,
    hankel_derivative_residual,
    kdv_limit_slope,
    kdv_rows_to_csv,
    spectral_transform_residual,
    t2_nonlinear_residual,
    toda_bilinear_residual,
    toda_nonlinear_residual,
    volterra_residual,
    wave_evolution_residual,
)
from .moments import (
    MeasureSpec,
    build_jet_table,
    build_moment_table,
    random_measure,
    validate,
)

EXIT_PASS = 0
EXIT_MEASURE = 1
EXIT_RESIDUAL = 2
EXIT_CONFIG = 3

DEFAULT_SEED = 12345
SEED_ENV = "NCINT_SEED"
DEFAULT_EPS = (0.1, 0.05, 0.025, 0.0125)
SLOPE_FLOOR_MATRIX = 3.7
SLOPE_FLOOR_SCALAR = 4.7

KDV_MATRIX_R = (
    MatrixP([[0, 1], [0, 0]]),
    MatrixP([[0, 0], [0, 0]]),
    MatrixP([[0, 0], [1, 0]]),
)
KDV_SCALAR_R = (
    MatrixP([[0]]),
    MatrixP([[1]]),
    MatrixP([[0]]),
    MatrixP([[1]]),
)


@dataclass(frozen=True)
class SuiteSpec:
    """Everything the orchestrator must know to run one suite."""

    name: str
    parity: str  # "any", "noneven", or "even"
    min_order: int  # 0 means static moment table
    flow: int  # 0 means static
    depth: Callable[[int], int]
    shifts: tuple
    runner: Callable
    min_n: int = 1  # wave flows need interior rows: N >= flow index


def _run_toda_nonlinear(measure, n, order):
    return toda_nonlinear_residual(build_jet_table(measure, 1, order, 2 * n + 2), n)


def _run_toda_bilinear(measure, n, order):
    return toda_bilinear_residual(build_jet_table(measure, 1, order, 2 * n + 2), n)


def _run_wave(measure, n, order, k):
    return wave_evolution_residual(build_jet_table(measure, k, order, 2 * n + 1), n)


def _run_t2(measure, n, order):
    return t2_nonlinear_residual(build_jet_table(measure, 2, order, 2 * n + 1), n)


def _run_hankel_derivative(measure, n, order):
    return hankel_derivative_residual(build_jet_table(measure, 1, order, 2 * n + 1), n)


def _run_spectral(measure, n, order):
    return spectral_transform_residual(build_moment_table(measure, 2 * n + 3), n)


def _run_discrete_toda(measure, n, order):
    return discrete_toda_residual(build_moment_table(measure, 2 * n + 2), n)


def _run_discrete_compat(measure, n, order):
    return discrete_compatibility_residual(build_moment_table(measure, 2 * n + 2), n)


def _run_volterra(measure, n, order):
    return volterra_residual(build_jet_table(measure, 2, order, 4 * n + 4), n)


def _run_backlund(measure, n, order):
    return backlund_residual(build_jet_table(measure, 2, order, 4 * n + 6), n)


SUITES = {
    spec.name: spec
    for spec in (
        SuiteSpec("toda-nonlinear", "any", 1, 1, lambda n: 2 * n + 2, (0,), _run_toda_nonlinear),
        SuiteSpec("toda-bilinear", "any", 2, 1, lambda n: 2 * n + 2, (0,), _run_toda_bilinear),
        SuiteSpec("wave-1", "any", 1, 1, lambda n: 2 * n + 1, (0,), lambda m, n, o: _run_wave(m, n, o, 1)),
        SuiteSpec("wave-2", "any", 1, 2, lambda n: 2 * n + 1, (0,), lambda m, n, o: _run_wave(m, n, o, 2), min_n=2),
        SuiteSpec("wave-3", "any", 1, 3, lambda n: 2 * n + 1, (0,), lambda m, n, o: _run_wave(m, n, o, 3), min_n=3),
        SuiteSpec("t2-nonlinear", "any", 1, 2, lambda n: 2 * n + 1, (0,), _run_t2),
        SuiteSpec("hankel-derivative", "any", 1, 1, lambda n: 2 * n + 1, (0,), _run_hankel_derivative),
        SuiteSpec("spectral", "noneven", 0, 0, lambda n: 2 * n + 3, (0, 1, 2, 3), _run_spectral),
        SuiteSpec("discrete-toda", "noneven", 0, 0, lambda n: 2 * n + 2, (0, 1, 2), _run_discrete_toda),
        SuiteSpec("discrete-compatibility", "noneven", 0, 0, lambda n: 2 * n + 2, (0, 1, 2, 3), _run_discrete_compat),
        SuiteSpec("volterra", "even", 1, 2, lambda n: 4 * n + 4, (0,), _run_volterra),
        SuiteSpec("backlund", "even", 2, 2, lambda n: 4 * n + 6, (0,), _run_backlund),
    )
}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved verify configuration; hashing this names the report file."""

    p: int
    n: int
    seed: int
    nodes: int
    even: bool
    suites: tuple
    jet_order: Optional[int]
    tolerance: str
    out: str
    measure_path: Optional[str]

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "n": self.n,
            "seed": self.seed,
            "nodes": self.nodes,
            "even": self.even,
            "suites": list(self.suites),
            "jet_order": self.jet_order,
            "tolerance": self.tolerance,
            "measure_path": self.measure_path,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _canonical_json(data: dict) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def _resolve_seed(value: Optional[int]) -> int:
    if value is not None:
        return value
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}") from exc
    return DEFAULT_SEED


def _resolve_suites(selection: str) -> tuple:
    if selection == "all":
        return tuple(SUITES)
    if selection not in SUITES:
        known = ", ".join(sorted(SUITES))
        raise ConfigError(f"unknown suite {selection!r}; known: all, {known}")
    return (selection,)


def resolve_config(args: argparse.Namespace) -> RunConfig:
    if args.p < 1:
        raise ConfigError("--p must be a positive block dimension")
    if args.n < 1:
        raise ConfigError("--n must be a positive site count")
    suites = _resolve_suites(args.suite)
    for name in suites:
        if args.n < SUITES[name].min_n:
            raise ConfigError(
                f"suite {name} needs --n of at least {SUITES[name].min_n}"
            )
    nodes = args.nodes if args.nodes is not None else args.n + 2
    if nodes < args.n + 1:
        raise ConfigError(f"--nodes must be at least n+1 = {args.n + 1}")
    if args.jet_order is not None:
        floor = max(SUITES[s].min_order for s in suites)
        if args.jet_order < floor:
            raise ConfigError(
                f"--jet-order {args.jet_order} is below the minimum {floor} for this selection"
            )
    try:
        tolerance = Fraction(args.tolerance)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"--tolerance must be a rational, got {args.tolerance!r}") from exc
    if tolerance < 0:
        raise ConfigError("--tolerance must be nonnegative")
    return RunConfig(
        p=args.p,
        n=args.n,
        seed=_resolve_seed(args.seed),
        nodes=nodes,
        even=args.even,
        suites=suites,
        jet_order=args.jet_order,
        tolerance=str(tolerance),
        out=args.out,
        measure_path=args.measure,
    )


def _load_measure(path: str) -> MeasureSpec:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read measure file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MeasureError(f"measure file {path} is not valid JSON: {exc}") from exc
    return MeasureSpec.from_dict(data)


def _measure_for(spec: SuiteSpec, cfg: RunConfig, primary: MeasureSpec, cache: dict):
    """Primary measure when its parity fits, else a seeded companion.

    Suites needing the other parity still run under --suite all; an
    explicit single-suite selection with a mismatched measure is an
    error rather than a silent substitution.
    """
    needs_even = spec.parity == "even"
    fits = (
        spec.parity == "any"
        or (needs_even and primary.even)
        or (spec.parity == "noneven" and not primary.even)
    )
    if fits:
        return primary, "primary"
    if len(cfg.suites) == 1:
        raise MeasureError(
            f"suite {spec.name} needs an {'even' if needs_even else 'non-even'} measure; "
            f"rerun with {'--even' if needs_even else 'no --even'} or pick --suite all"
        )
    key = "even" if needs_even else "noneven"
    if key not in cache:
        cache[key] = random_measure(cfg.p, cfg.nodes, cfg.seed, even=needs_even)
    return cache[key], f"companion-{key}"


def run_verify(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    tolerance = Fraction(cfg.tolerance)
    if cfg.measure_path is not None:
        primary = _load_measure(cfg.measure_path)
        if primary.p != cfg.p:
            raise ConfigError(
                f"measure file has block dimension {primary.p}, --p says {cfg.p}"
            )
    else:
        primary = random_measure(cfg.p, cfg.nodes, cfg.seed, even=cfg.even)
    companions: dict = {}
    suite_results = {}
    all_pass = True
    for name in cfg.suites:
        spec = SUITES[name]
        measure, source = _measure_for(spec, cfg, primary, companions)
        validate(measure, cfg.n, shifts=spec.shifts)
        order = cfg.jet_order if cfg.jet_order is not None else spec.min_order
        order = max(order, spec.min_order)
        report = spec.runner(measure, cfg.n, order)
        body = report.to_dict(tolerance)
        body["params"].update({"measure": source, "flow": spec.flow, "jet_order": order})
        suite_results[name] = body
        status = "PASS" if body["pass"] else "FAIL"
        all_pass = all_pass and body["pass"]
        worst = report.max_norm()
        print(
            f"{name}: {status} ({len(report.sites)} residuals, max |.| = {worst})"
        )
    run_report = {
        "metadata": {
            "tool": "ncint",
            "version": __version__,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        },
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash(),
        "suites": suite_results,
        "pass": all_pass,
    }
    selection = args.suite
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / f"{selection}-{cfg.config_hash()}.jsonl"
    with open(out_path, "a", encoding="utf-8") as fh:
        fh.write(_canonical_json(run_report) + "\n")
    print(f"report appended to {out_path}")
    if not all_pass:
        return EXIT_RESIDUAL
    return EXIT_PASS


def _parse_eps(text: str) -> list:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"--eps must be comma-separated floats, got {text!r}") from exc
    if not values or any(e <= 0 for e in values):
        raise ConfigError("--eps needs at least one positive step")
    return values


def run_kdv(args: argparse.Namespace) -> int:
    eps = _parse_eps(args.eps)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cases = {
        "matrix": (KDV_MATRIX_R, SLOPE_FLOOR_MATRIX),
        "scalar": (KDV_SCALAR_R, SLOPE_FLOOR_SCALAR),
    }
    selected = cases if args.case == "both" else {args.case: cases[args.case]}
    ok = True
    for label, (r_coeffs, floor) in selected.items():
        slope, rows = kdv_limit_slope(r_coeffs, eps)
        path = out_dir / f"kdv-{label}.csv"
        path.write_text(kdv_rows_to_csv(rows), encoding="utf-8")
        passed = slope >= floor
        ok = ok and passed
        print(
            f"kdv {label}: slope {slope:.4f} (floor {floor}) "
            f"{'PASS' if passed else 'FAIL'}; table in {path}"
        )
    return EXIT_PASS if ok else EXIT_RESIDUAL


def run_gen_measure(args: argparse.Namespace) -> int:
    if args.p < 1 or args.nodes < 1:
        raise ConfigError("gen-measure needs positive --p and --nodes")
    seed = _resolve_seed(args.seed)
    measure = random_measure(args.p, args.nodes, seed, even=args.even)
    text = json.dumps(measure.to_dict(), sort_keys=True, indent=2) + "\n"
    if args.out is not None:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"measure written to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_PASS


def run_report_view(args: argparse.Namespace) -> int:
    try:
        lines = Path(args.path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read report {args.path}: {exc}") from exc
    shown = 0
    for idx, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            entry = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"line {idx + 1} is not valid JSON: {exc}") from exc
        meta = entry.get("metadata", {})
        print(
            f"run {idx + 1}: {meta.get('timestamp', '?')} "
            f"config {entry.get('config_hash', '?')} "
            f"{'PASS' if entry.get('pass') else 'FAIL'}"
        )
        for name, body in sorted(entry.get("suites", {}).items()):
            sites = body.get("sites", [])
            exact = sum(1 for s in sites if s.get("exact_zero"))
            print(
                f"  {name}: {'PASS' if body.get('pass') else 'FAIL'} "
                f"({exact}/{len(sites)} residuals exactly zero)"
            )
        shown += 1
    if shown == 0:
        print("no runs recorded")
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ncint",
        description=(
            "Exact verification of matrix orthogonal polynomial lattice identities "
            "over finite discrete measures."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="run residual suites over a measure")
    verify.add_argument("--p", type=int, default=2, help="block dimension (default 2)")
    verify.add_argument("--n", type=int, default=3, help="largest lattice site N (default 3)")
    verify.add_argument("--seed", type=int, default=None, help=f"RNG seed (default ${SEED_ENV} or {DEFAULT_SEED})")
    verify.add_argument("--nodes", type=int, default=None, help="node count, pairs when --even (default n+2)")
    verify.add_argument("--even", action="store_true", help="draw a symmetric measure")
    verify.add_argument("--suite", default="all", help="suite name or 'all' (default all)")
    verify.add_argument("--jet-order", type=int, default=None, dest="jet_order", help="jet truncation order override")
    verify.add_argument("--measure", default=None, help="JSON measure file to use instead of drawing one")
    verify.add_argument("--tolerance", default="0", help="rational residual tolerance (default 0)")
    verify.add_argument("--out", default="reports", help="report directory (default reports)")
    verify.set_defaults(func=run_verify)

    kdv = sub.add_parser("kdv-limit", help="fit the continuum-limit defect decay slope")
    kdv.add_argument("--eps", default=",".join(str(e) for e in DEFAULT_EPS), help="comma-separated step sizes")
    kdv.add_argument("--case", choices=("matrix", "scalar", "both"), default="both", help="defect family (default both)")
    kdv.add_argument("--out", default="reports", help="CSV directory (default reports)")
    kdv.set_defaults(func=run_kdv)

    gen = sub.add_parser("gen-measure", help="emit a deterministic random measure as JSON")
    gen.add_argument("--p", type=int, default=2, help="block dimension (default 2)")
    gen.add_argument("--nodes", type=int, default=5, help="node count, pairs when --even (default 5)")
    gen.add_argument("--seed", type=int, default=None, help=f"RNG seed (default ${SEED_ENV} or {DEFAULT_SEED})")
    gen.add_argument("--even", action="store_true", help="draw a symmetric measure")
    gen.add_argument("--out", default=None, help="output file (default stdout)")
    gen.set_defaults(func=run_gen_measure)

    rep = sub.add_parser("report", help="pretty-print a stored JSONL report")
    rep.add_argument("path", help="path to a report .jsonl file")
    rep.set_defaults(func=run_report_view)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MeasureError as exc:
        print(f"measure error: {exc}", file=sys.stderr)
        return EXIT_MEASURE
    except NcintError as exc:
        print(f"verification error: {exc}", file=sys.stderr)
        return EXIT_MEASURE


if __name__ == "__main__":
    sys.exit(main())
