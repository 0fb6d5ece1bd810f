"""Command-line front end.

Subcommands::

    equipotential analyze  --shape S [--rho-grid A:B:N] [--curves-dir DIR]
    equipotential verify   --shape S [--suite exterior|interior|all]
    equipotential heleshaw --shape S --t-end T [--dt D] [--modes M]
    equipotential corpus   --seed S [--count N] [--suite exterior|interior|all]

``--shape`` takes a shape JSON file or a preset expression such as
``ellipse(1,0.25)``. Exit status is 0 when every check passes, 1 on a
confirmed violation and 2 on bad input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import corpus as corpus_mod
from . import heleshaw
from .conformal import ProblemKind, check_radius, load_shape, parse_preset, shape_to_dict
from .errors import DomainError, EquipotentialError, KindError, ValidationError
from .functionals import REPORT_COLUMNS, report, write_report_csv
from .levelset import DEFAULT_SAMPLES, fmt, sample_levelset, write_csv
from .verify import (
    IDENTITY_TOL,
    PASS_TOL,
    InequalityReport,
    check_identities,
    check_inequalities,
    check_isoperimetric_monotonicity,
    check_variations,
)

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2

DEFAULT_GRID = {ProblemKind.EXTERIOR: np.geomspace(1.0, 8.0, 8),
                ProblemKind.INTERIOR: np.geomspace(0.1, 1.0, 8)}
DEFAULT_VERIFY_RADII = {ProblemKind.EXTERIOR: corpus_mod.EXTERIOR_RADII,
                        ProblemKind.INTERIOR: corpus_mod.INTERIOR_RADII}
# counts of margins per bin: (-inf, -tol), [-tol, 0), then decades upward
HIST_EDGES = (0.0, 1e-12, 1e-9, 1e-6, 1e-3, 1.0)
DEFICIT_TOL = 1e-8


class UsageError(EquipotentialError):
    pass


# -- input parsing ------------------------------------------------------------------

def resolve_shape(spec: str, flux: float | None = None):
    """Load a shape file, or fall back to a preset expression."""
    if os.path.exists(spec):
        fmap = load_shape(spec)
        return fmap if flux is None else fmap.with_flux(flux)
    if spec.endswith(".json"):
        raise UsageError(f"shape file {spec!r} not found")
    return parse_preset(spec, 1.0 if flux is None else flux)


def parse_grid(text: str):
    """``A:B:N`` -> N radii from A to B, equally spaced in log rho (uniform in potential)."""
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"--rho-grid expects A:B:N, got {text!r}")
    try:
        a, b, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"--rho-grid expects A:B:N, got {text!r}") from None
    if count < 1 or not (a > 0 and b > 0):
        raise UsageError("--rho-grid needs positive radii and N >= 1")
    if count == 1:
        return np.array([a])
    grid = np.geomspace(a, b, count)
    grid[0], grid[-1] = a, b
    return grid


def _grid(args, fmap, default):
    radii = parse_grid(args.rho_grid) if args.rho_grid else np.asarray(default, dtype=float)
    for rho in radii:
        check_radius(fmap, rho)
    return [float(r) for r in radii]


def _emit(args, text: str):
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def _dumps(doc) -> str:
    # floats go out in shortest round-trip form; non-finite values become null
    return json.dumps(_clean(doc), indent=2, allow_nan=False) + "\n"


# -- subcommands ----------------------------------------------------------------------

def cmd_analyze(args) -> int:
    fmap = resolve_shape(args.shape, args.flux)
    radii = _grid(args, fmap, DEFAULT_GRID[fmap.kind])
    samples = [sample_levelset(fmap, rho, args.samples) for rho in radii]
    reports = [report(s) for s in samples]
    if args.curves_dir:
        os.makedirs(args.curves_dir, exist_ok=True)
        for i, s in enumerate(samples):
            with open(os.path.join(args.curves_dir, f"curve_{i:03d}.csv"), "w", newline="") as fh:
                write_csv(s, fh)
    if args.format == "json":
        rows = [{c: getattr(r, c) for c in REPORT_COLUMNS} for r in reports]
        _emit(args, _dumps({"shape": shape_to_dict(fmap), "reports": rows}))
    else:
        buf = io.StringIO()
        write_report_csv(reports, buf)
        _emit(args, buf.getvalue())
    return EXIT_OK


def _suite_kind(suite: str, fmap) -> None:
    if suite != "all" and ProblemKind(suite) is not fmap.kind:
        raise KindError(f"{fmap.kind.value} shape cannot run the {suite} suite")


def cmd_verify(args) -> int:
    fmap = resolve_shape(args.shape, args.flux)
    _suite_kind(args.suite, fmap)
    radii = _grid(args, fmap, DEFAULT_VERIFY_RADII[fmap.kind])
    checks = []
    for rho in radii:
        s = sample_levelset(fmap, rho, args.samples)
        checks += check_inequalities(s, args.tol)
        if args.suite == "all":
            checks += check_identities(s, IDENTITY_TOL)
            try:
                checks += check_variations(fmap, rho, args.samples)
            except DomainError:
                pass  # FD stencil does not fit at the edge of the domain
    if args.suite == "all" and fmap.kind is ProblemKind.EXTERIOR and len(radii) > 1:
        mono = check_isoperimetric_monotonicity(fmap, radii, args.samples)
        checks.append(_monotonicity_record(mono))
    failed = sum(not c.passed for c in checks)
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("id", "rho", "lhs", "rhs", "margin", "pass"))
        for c in checks:
            writer.writerow((c.id, fmt(c.rho), fmt(c.lhs), fmt(c.rhs), fmt(c.margin), int(c.passed)))
        _emit(args, buf.getvalue())
    else:
        _emit(args, _dumps({"shape": shape_to_dict(fmap), "checks": [c.as_dict() for c in checks]}))
    if failed:
        print(f"{failed} of {len(checks)} checks failed", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def _monotonicity_record(mono):
    scale = np.maximum(np.abs(mono.deficit), 1.0)
    margin = float(min(np.min(mono.d_deficit / scale), np.min(mono.d_deficit_scaled),
                       np.min(mono.fd_deficit / scale[1:]), np.min(mono.fd_deficit_scaled)))
    return InequalityReport("isoperimetric_monotonicity", margin, 0.0, margin, mono.passed,
                            mono.tolerance, math.nan,
                            status="pass" if mono.passed else "violation")


def cmd_heleshaw(args) -> int:
    fmap = resolve_shape(args.shape, args.flux)
    if fmap.kind is not ProblemKind.EXTERIOR:
        raise KindError("Hele-Shaw runs need an exterior shape")
    if not args.t_end > 0 or not args.dt > 0:
        raise UsageError("--t-end and --dt must be positive")
    result = heleshaw.run(fmap, args.t_end, args.dt, args.modes, args.samples, args.sample_every,
                          max_samples=args.max_samples)
    deficit = result.column("deficit")
    drops = np.diff(deficit) if deficit.size > 1 else np.zeros(0)
    scale = max(float(np.max(np.abs(deficit))), 1.0)
    worst_drop = float(np.min(drops)) if drops.size else 0.0
    min_cov = float(np.min(result.column("cov_kv")))
    monotone = worst_drop >= -DEFICIT_TOL * scale
    cov_ok = min_cov >= -args.tol
    if args.format == "json":
        doc = {
            "shape": shape_to_dict(fmap),
            "status": result.status,
            "message": result.message,
            "steps": result.steps,
            "t_final": result.final.t,
            "deficit_monotone": bool(monotone),
            "worst_deficit_drop": worst_drop,
            "min_cov_kv": min_cov,
            "trajectory": [
                {c: (s.c if c == "c" else s.A_complement if c == "A" else getattr(s, c))
                 for c in heleshaw.TRAJECTORY_COLUMNS}
                for s in result.states
            ],
        }
        _emit(args, _dumps(doc))
    else:
        buf = io.StringIO()
        heleshaw.write_trajectory_csv(result, buf)
        _emit(args, buf.getvalue())
    print(f"status: {result.status} at t = {result.final.t:.6g} after {result.steps} steps"
          + (f" ({result.message})" if result.message else ""), file=sys.stderr)
    return EXIT_OK if monotone and cov_ok else EXIT_VIOLATION


def _histogram(margins, tol):
    counts = [int(np.count_nonzero(margins < -tol)),
              int(np.count_nonzero((margins >= -tol) & (margins < 0.0)))]
    edges = HIST_EDGES + (math.inf,)
    for lo, hi in zip(edges[:-1], edges[1:]):
        counts.append(int(np.count_nonzero((margins >= lo) & (margins < hi))))
    return counts


def _hist_labels():
    labels = ["n_violation", "n_tolerated"]
    for lo, hi in zip(HIST_EDGES, HIST_EDGES[1:] + (math.inf,)):
        labels.append(f"n_{lo:g}_{hi:g}")
    return labels


def cmd_corpus(args) -> int:
    kinds = ["exterior", "interior"] if args.suite == "all" else [args.suite]
    rows = []
    summaries = {}
    for kind in kinds:
        fd = ()
        if args.convexity:
            fd = corpus_mod.EXTERIOR_FD_RADII if kind == "exterior" else corpus_mod.INTERIOR_FD_RADII
        summary = corpus_mod.run_corpus(args.seed, args.count, kind, args.samples, None, fd, args.tol,
                                        args.max_degree, args.amplitude, not args.no_rescale,
                                        args.workers)
        summaries[kind] = summary
        for id_ in summary.ids:
            margins = summary.margins(id_)
            rows.append({
                "kind": kind,
                "id": id_,
                "maps": summary.maps,
                "rejected": summary.rejected,
                "errors": summary.errors,
                "checked": int(margins.size),
                "passed": int(np.count_nonzero(margins >= -args.tol)),
                "confirmed_violations": summary.violations(id_, args.tol),
                "worst_margin": summary.worst_margin(id_),
                **dict(zip(_hist_labels(), _histogram(margins, args.tol))),
            })
    violations = sum(r["confirmed_violations"] for r in rows)
    if args.format == "json":
        doc = {"seed": args.seed, "count": args.count, "tol": args.tol, "rows": rows}
        if args.convexity:
            doc["min_convexity"] = {
                k: {name: s.min_convexity(name) for name in corpus_mod.CONVEX_FUNCTIONALS}
                for k, s in summaries.items()
            }
        _emit(args, _dumps(doc))
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        columns = list(rows[0]) if rows else []
        writer.writerow(columns)
        for r in rows:
            writer.writerow([fmt(v) if isinstance(v, float) else v for v in r.values()])
        _emit(args, buf.getvalue())
    return EXIT_VIOLATION if violations else EXIT_OK


# -- argument parsing -------------------------------------------------------------

def _samples(text: str) -> int:
    n = int(text)
    if n < 128 or n & (n - 1):
        raise argparse.ArgumentTypeError(f"sample count must be a power of two >= 128, got {text}")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="equipotential", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, samples_default=DEFAULT_SAMPLES):
        p.add_argument("--samples", type=_samples, default=samples_default,
                       help="points per curve (power of two)")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    def shape(p):
        p.add_argument("--shape", required=True, help="shape JSON file or preset, e.g. 'ellipse(1,0.25)'")
        p.add_argument("--flux", type=float, default=None, help="override the shape's flux")

    p = sub.add_parser("analyze", help="functionals over a grid of level sets")
    shape(p)
    p.add_argument("--rho-grid", help="A:B:N, log-spaced reference radii")
    p.add_argument("--curves-dir", help="also write one per-curve CSV per radius here")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify", help="inequality suite with a pass/fail verdict")
    shape(p)
    p.add_argument("--rho-grid", help="A:B:N, log-spaced reference radii")
    p.add_argument("--suite", choices=("exterior", "interior", "all"), default="all")
    p.add_argument("--tol", type=float, default=PASS_TOL)
    common(p)
    p.set_defaults(func=cmd_verify, format="json")

    p = sub.add_parser("heleshaw", help="Hele-Shaw growth of an exterior shape")
    shape(p)
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--dt", type=float, default=heleshaw.DEFAULT_DT)
    p.add_argument("--modes", type=int, default=heleshaw.DEFAULT_MODES)
    p.add_argument("--max-samples", type=_samples, default=heleshaw.MAX_SAMPLES)
    p.add_argument("--sample-every", type=int, default=1)
    p.add_argument("--tol", type=float, default=DEFICIT_TOL, help="tolerance on cov(kappa, v) >= 0")
    common(p, samples_default=None)
    p.set_defaults(func=cmd_heleshaw)

    p = sub.add_parser("corpus", help="inequality sweep over seeded random maps")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--suite", choices=("exterior", "interior", "all"), default="exterior")
    p.add_argument("--tol", type=float, default=PASS_TOL)
    p.add_argument("--max-degree", type=int, default=6)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--no-rescale", action="store_true",
                   help="reject non-univalent draws instead of shrinking them")
    p.add_argument("--convexity", action="store_true", help="also run the FD convexity checks")
    p.add_argument("--workers", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_corpus)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ValidationError, KindError, DomainError, UsageError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
