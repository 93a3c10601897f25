"""Command-line front end.

Exit codes: 0 success, 1 verification failed, 2 invalid input or system,
3 oracle infeasible.  Data goes to stdout (or ``--output``); diagnostics go
to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys
from fractions import Fraction

import mpmath

from . import catalog, decimation, determinants, graphs, zeta
from .errors import (
    ComplexSpectrum,
    FracdetError,
    OracleInfeasible,
    OutOfConvergenceRegion,
    ParameterOutOfRange,
    ParseError,
    ValidationError,
)
from .graphs import LaplacianKind

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_INFEASIBLE = 0, 1, 2, 3


class UsageError(Exception):
    pass


def parse_levels(text: str) -> list[int]:
    """``"3"``, ``"1..6"`` or ``"1,3,5"``."""
    text = text.strip()
    m = re.fullmatch(r"(\d+)\.\.(\d+)", text)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        levels = list(range(lo, hi + 1))
    else:
        try:
            levels = [int(x) for x in text.split(",")]
        except ValueError as exc:
            raise UsageError(f"bad level range {text!r}") from exc
    if not levels or min(levels) < 0:
        raise UsageError(f"level range {text!r} is empty or negative")
    return levels


def _parse_complex(text: str) -> mpmath.mpc:
    t = text.strip().replace(" ", "").replace("i", "j")
    if "/" in t and "j" not in t:
        f = Fraction(t)
        return mpmath.mpc(mpmath.mpf(f.numerator) / f.denominator)
    try:
        return mpmath.mpc(mpmath.mpmathify(t))
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad value of s: {text!r}") from exc


def parse_s_grid(text: str) -> list[mpmath.mpc]:
    """``"2,3,2+1i"`` or a real range ``"2..4:1/2"`` (step after the colon)."""
    m = re.fullmatch(r"\s*([^.:]+)\.\.([^:]+):(.+)", text)
    if m:
        lo, hi, step = (Fraction(x.strip()) for x in m.groups())
        if step <= 0 or hi < lo:
            raise UsageError(f"bad s range {text!r}")
        out = []
        x = lo
        while x <= hi:
            out.append(mpmath.mpc(mpmath.mpf(x.numerator) / x.denominator))
            x += step
        return out
    return [_parse_complex(x) for x in text.split(",") if x.strip()]


def _params(pairs: list[str]) -> dict[str, str]:
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise UsageError(f"--param expects NAME=VALUE, got {pair!r}")
        key, value = pair.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _family(args):
    if getattr(args, "config", None):
        return catalog.load_family(args.config)
    if not args.family:
        raise UsageError("need --family or --config")
    try:
        return catalog.builtin(args.family, **_params(args.param))
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from exc


def _emit(text: str, args) -> None:
    if getattr(args, "output", None):
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _note(msg: str) -> None:
    print(f"note: {msg}", file=sys.stderr)


def _precision(args) -> int:
    if args.precision < 64:
        raise UsageError("--precision must be at least 64 bits")
    return args.precision


# --- commands ----------------------------------------------------------------

def cmd_list(args) -> int:
    names = [args.family] if args.family else sorted(catalog.BUILTIN)
    rows = []
    for name in names:
        if name not in catalog.BUILTIN:
            raise UsageError(f"unknown family {name!r}")
        entry = catalog.BUILTIN[name]
        rows.append({"name": name, "parameters": entry["params"], "description": entry["description"],
                     "closed_forms": ["log_det_regularized", "c_constant", "j", "lambda"]})
    if args.json:
        _emit(json.dumps({"schema_version": 1, "families": rows}, indent=2) + "\n", args)
        return EXIT_OK
    lines = []
    for r in rows:
        params = ", ".join(f"{k}: {v}" for k, v in r["parameters"].items()) or "none"
        lines.append(f"{r['name']}\t{r['description']}\tparameters: {params}")
    _emit("\n".join(lines) + "\n", args)
    return EXIT_OK


def cmd_verify(args) -> int:
    family = _family(args)
    precision = _precision(args)
    levels = parse_levels(args.levels) if args.levels else list(range(1, 5 if args.oracle else 7))
    for note in family.notes:
        _note(note)
    if args.oracle and family.graph_builder is None:
        _note(f"{family.label} has no graph oracle; the oracle column is left empty")
    report = determinants.verify_identity(
        family, levels, with_oracle=args.oracle, kind=LaplacianKind(args.kind),
        precision=precision, max_oracle_vertices=args.max_oracle_vertices,
    )
    _emit(report.to_json() if args.format == "json" else report.to_csv(), args)
    if not report.passed:
        bad = [str(r.n) for r in report.rows if not r.passed]
        print(f"verification failed at levels {', '.join(bad)}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_spectrum(args) -> int:
    family = _family(args)
    precision = _precision(args)
    level = decimation.spectrum(family, args.level, precision)
    if args.format == "json":
        data = {
            "schema_version": 1,
            "family": family.name,
            "parameters": {k: str(v) for k, v in family.parameters.items()},
            "level": args.level,
            "total": level.total,
            "entries": [{"eigenvalue": _fmt(v, precision), "multiplicity": k,
                         "exact": str(v) if isinstance(v, Fraction) else None}
                        for v, k in level.entries],
        }
        _emit(json.dumps(data, indent=2) + "\n", args)
        return EXIT_OK
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["eigenvalue", "multiplicity", "exact"])
    for v, k in level.entries:
        writer.writerow([_fmt(v, precision), k, str(v) if isinstance(v, Fraction) else ""])
    _emit(buf.getvalue(), args)
    return EXIT_OK


def _fmt(v, precision: int) -> str:
    if isinstance(v, Fraction) and v.denominator == 1:
        return str(v.numerator)
    with mpmath.workprec(precision):
        x = mpmath.mpf(v.numerator) / v.denominator if isinstance(v, Fraction) else v
        return mpmath.nstr(x, determinants.DIGITS, strip_zeros=False)


def cmd_zeta(args) -> int:
    family = _family(args)
    precision = _precision(args)
    if args.special_values:
        _emit(zeta.special_values_to_csv(zeta.special_values(family), precision), args)
        return EXIT_OK
    if not args.s:
        raise UsageError("need --s (e.g. --s 2,3 or --s 2..4:1/2) or --special-values")
    grid = parse_s_grid(args.s)
    if any(s.real == 0 and s.imag == 0 for s in grid):
        raise UsageError("s = 0 lies outside the convergence region; "
                         "use 'zeta --special-values' for the closed-form values at s = 0")
    values = zeta.zeta_grid(family, grid, args.level, precision)
    if args.format == "json":
        _emit(zeta.grid_to_json(values, family.name, family.parameters), args)
    else:
        _emit(zeta.grid_to_csv(values), args)
    return EXIT_OK


def cmd_export_graph(args) -> int:
    family = _family(args)
    if family.graph_builder is None:
        raise UsageError(f"{family.label} has no explicit graph construction")
    _emit(graphs.export_edge_list(family.graph_builder(args.level), LaplacianKind(args.kind)), args)
    return EXIT_OK


# --- parser --------------------------------------------------------------------

def _family_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", help="built-in family name (see 'list')")
    p.add_argument("--param", action="append", metavar="NAME=VALUE",
                   help="family parameter; rationals as p/q (repeatable)")
    p.add_argument("--config", help="JSON family config file instead of --family")
    p.add_argument("--precision", type=int, default=256, help="working precision in bits (default 256)")
    p.add_argument("--output", help="write data here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracdet",
        description="Spectral decimation and Laplacian determinants on fractal graph sequences.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list", help="list built-in families")
    p.add_argument("--family")
    p.add_argument("--json", action="store_true")
    p.add_argument("--output")
    p.set_defaults(func=cmd_list)

    p = sub.add_parser("verify", help="check the determinant identity level by level")
    _family_args(p)
    p.add_argument("--levels", help="e.g. 1..6 (default 1..4 with --oracle, else 1..6)")
    p.add_argument("--oracle", action="store_true", help="compare with the exact graph oracle")
    p.add_argument("--kind", choices=[k.value for k in LaplacianKind], default="probabilistic")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--max-oracle-vertices", type=int, default=determinants.DEFAULT_ORACLE_VERTICES)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("spectrum", help="dump the level-n spectrum")
    _family_args(p)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("zeta", help="spectral zeta partial sums or special values")
    _family_args(p)
    p.add_argument("--s", help="comma list (2,3,2+1i) or range lo..hi:step")
    p.add_argument("--level", type=int, default=6, help="truncation level (default 6)")
    p.add_argument("--special-values", action="store_true",
                   help="closed-form values of each polynomial zeta function at s = 0")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_zeta)

    p = sub.add_parser("export-graph", help="write a level-n graph as an edge list")
    _family_args(p)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--kind", choices=[k.value for k in LaplacianKind], default="probabilistic")
    p.set_defaults(func=cmd_export_graph)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OracleInfeasible as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValidationError as exc:
        print("error: invalid system", file=sys.stderr)
        for v in exc.violations:
            print(f"  {v}", file=sys.stderr)
        return EXIT_INVALID
    except (UsageError, ParseError, ParameterOutOfRange, OutOfConvergenceRegion,
            ComplexSpectrum, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except FracdetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
