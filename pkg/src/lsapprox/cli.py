"""Command-line interface.

Subcommands::

    lsapprox table1 | table2               reproduce the comparison tables
    lsapprox approx --spec S --t T --x X   approximant values at the given points
    lsapprox bound --spec S --t T          a-priori error certificate
    lsapprox ph-expand --spec S            Erlang-mixture expansion of a phase-type law

``--t`` and ``--x`` take exact rationals ("50/5") or decimals ("10.2"); both
are parsed as exact fractions, so floor(t x) is never subject to binary
rounding.  Numbers are printed with round-half-even to ``--decimals``
places.  Exit status is 1 for invalid input and 2 for numerical failures.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from decimal import ROUND_HALF_EVEN, Decimal
from fractions import Fraction

from . import tables
from .bounds import certificate_for
from .distributions import PhaseType, load_spec
from .errors import DomainError, NumericError, SpecError
from .oracle import lt_star_mc
from .phase_type import maier_expand

EXIT_INVALID = 1
EXIT_NUMERIC = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_rational(text):
    """Parse "k/t", an integer or a decimal into an exact Fraction."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from exc


def parse_positive_rational(text):
    value = parse_rational(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return value


def parse_x_list(text):
    values = [parse_rational(part) for part in text.split(",") if part.strip()]
    if not values:
        raise argparse.ArgumentTypeError("empty x list")
    if any(v < 0 for v in values):
        raise argparse.ArgumentTypeError("x values must be non-negative")
    return values


def format_number(value, decimals):
    """Round-half-even on the exact binary value; None prints as an empty cell."""
    if value is None:
        return ""
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (bool, str)):
        return str(value)
    if isinstance(value, int):
        return str(value)
    quantum = Decimal(1).scaleb(-decimals)
    return str(Decimal(float(value)).quantize(quantum, rounding=ROUND_HALF_EVEN))


def _json_value(value, decimals):
    if value is None or isinstance(value, (bool, str)):
        return value
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, int):
        return value
    if isinstance(value, dict):
        return {k: _json_value(v, decimals) for k, v in value.items()}
    return float(format_number(value, decimals))


def render(rows, fmt, decimals):
    """Render a list of row dicts as csv, json or an aligned text table."""
    if fmt == "json":
        return json.dumps([{k: _json_value(v, decimals) for k, v in row.items()} for row in rows]) + "\n"
    headers = list(rows[0].keys()) if rows else []
    cells = [[format_number(row[h], decimals) for h in headers] for row in rows]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(headers)
        writer.writerows(cells)
        return buf.getvalue()
    widths = [max(len(h), *(len(c[i]) for c in cells)) if cells else len(h) for i, h in enumerate(headers)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(headers, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells)
    return "\n".join(lines) + "\n"


def build_parser():
    parser = _Parser(prog="lsapprox", description="LS lattice approximations of distribution functions")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json", "pretty"), default="pretty")
    common.add_argument("--decimals", type=int, default=4, help="digits after the point (default 4)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("table1", parents=[common], help="F, L*_5, R_5, W_5 for the test compound")
    sub.add_parser("table2", parents=[common], help="F, L*_5, L*_10, M^[2]_5, G^[2]_5 for the test compound")

    approx = sub.add_parser("approx", parents=[common], help="approximant values at chosen points")
    approx.add_argument("--spec", required=True, help="JSON spec file or inline JSON")
    approx.add_argument("--t", required=True, type=parse_positive_rational)
    approx.add_argument("--x", required=True, type=parse_x_list, help="comma-separated, e.g. 0,5/5,10.2")
    approx.add_argument("--clamp", action="store_true", help="clip approximant values to [0, 1]")
    approx.add_argument("--mc-samples", type=int, default=0,
                        help="also estimate L*_t by Monte Carlo with this many gamma draws")
    approx.add_argument("--seed", type=int, default=0)

    bound = sub.add_parser("bound", parents=[common], help="a-priori sup-norm error certificate")
    bound.add_argument("--spec", required=True)
    bound.add_argument("--t", required=True, type=parse_positive_rational)

    expand = sub.add_parser("ph-expand", parents=[common], help="Erlang-mixture form of a phase-type law")
    expand.add_argument("--spec", required=True)
    expand.add_argument("--c", type=parse_positive_rational, default=None,
                        help="common Erlang rate (default: largest |A_ij|)")
    expand.add_argument("--epsilon", type=float, default=1e-10)
    return parser


def _rows_table(rows):
    return [{"x": r["x"], **{k: v for k, v in r.items() if k != "x"}} for r in rows]


def _approx_rows(args):
    spec = load_spec(args.spec)
    rows = tables.comparison_rows(spec, args.t, args.x, clamp=args.clamp)
    if args.mc_samples:
        if not spec.has_exact_cdf:
            raise SpecError("Monte Carlo check needs an exact CDF")
        for row in rows:
            est = lt_star_mc(spec.cdf, float(args.t), float(row["x"]), args.mc_samples, args.seed)
            row["L*_mc"] = est.mean
            row["L*_mc_se"] = est.std_error
    return rows


def _bound_rows(args):
    cert = certificate_for(load_spec(args.spec), float(args.t))
    row = {"source": cert.source.value, "t": args.t, "bound": cert.bound}
    row.update({k: v for k, v in cert.inputs.items()})
    return [row]


def _expand_rows(args):
    spec = load_spec(args.spec)
    if not isinstance(spec, PhaseType):
        raise SpecError("ph-expand needs a phase_type spec")
    c = None if args.c is None else float(args.c)
    mixture = maier_expand(spec.rep, c=c, epsilon=args.epsilon)
    if args.format == "json":
        return mixture
    rows = [{"a": None, "j": 0, "w": mixture.zero_mass}]
    rows += [{"a": comp.a, "j": comp.j, "w": comp.w} for comp in mixture.components]
    rows.append({"a": None, "j": None, "w": mixture.truncated_mass})
    rows[-1]["j"] = "truncated"
    return rows


def run(argv=None, out=None):
    """Parse ``argv``, write the result to ``out`` and return the exit status."""
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        if args.decimals < 0 or args.decimals > 17:
            raise SpecError("--decimals must lie in 0..17")
        if args.command == "table1":
            rows = _rows_table(tables.table1())
        elif args.command == "table2":
            rows = _rows_table(tables.table2())
        elif args.command == "approx":
            rows = _approx_rows(args)
        elif args.command == "bound":
            rows = _bound_rows(args)
        else:
            rows = _expand_rows(args)
            if not isinstance(rows, list):
                out.write(rows.to_json() + "\n")
                return 0
        out.write(render(rows, args.format, args.decimals))
        return 0
    except UsageError as exc:
        print(f"lsapprox: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SpecError, DomainError, OSError) as exc:
        print(f"lsapprox: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericError as exc:
        print(f"lsapprox: numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
