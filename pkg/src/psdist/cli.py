"""Command-line front end.

    psdist coeffs --max-m 10
    psdist pmf --x 1 --max-k 20 --format csv
    psdist moments --max-order 4 --kind cumulant
    psdist sample --n 1000 --x 1 --seed 7 --format json
    psdist validate --xs 0.1 1 10

Exit codes: 0 success, 1 validation failure, 2 usage error, 3 domain error.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import math
import os
import sys
from typing import Sequence

from . import families, mean_param, moments, oracle, series

try:
    from gmpy2 import mpz as _mpz
except ImportError:  # pragma: no cover
    _mpz = int

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2
EXIT_DOMAIN = 3

MAX_COEFF_INDEX = 10_000


class DomainError(ValueError):
    pass


def int_str(n: int) -> str:
    return str(_mpz(n))


def fmt_float(v: float) -> str:
    return format(v, ".17g")


def _csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _text_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    cols = [list(map(str, col)) for col in zip(header, *rows)] if rows else [[h] for h in header]
    widths = [max(len(c) for c in col) for col in cols]
    lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
    for row in rows:
        lines.append("  ".join(str(c).rjust(w) for c, w in zip(row, widths)))
    return "\n".join(lines) + "\n"


# -- commands ------------------------------------------------------------


@contextlib.contextmanager
def _unlimited_int_digits():
    # r_10000 has a ~12000-digit denominator, over the default str() limit.
    getter = getattr(sys, "get_int_max_str_digits", None)
    if getter is None:
        yield
        return
    old = getter()
    sys.set_int_max_str_digits(0)
    try:
        yield
    finally:
        sys.set_int_max_str_digits(old)


def cmd_coeffs(max_m: int, fmt: str) -> str:
    if not 0 <= max_m <= MAX_COEFF_INDEX:
        raise DomainError(f"--max-m must be in [0, {MAX_COEFF_INDEX}]")
    with _unlimited_int_digits():
        return _render_coeffs(max_m, fmt)


def _render_coeffs(max_m: int, fmt: str) -> str:
    r = series.coefficients(max_m)
    header = ["m", "numerator", "denominator", "a_m_float"]
    rows = [
        (m, int_str(c.numerator), int_str(c.denominator), fmt_float(float(c) * series.INV_SQRT2))
        for m, c in enumerate(r)
    ]
    if fmt == "json":
        payload = {
            "rows": [
                {"m": m, "numerator": n, "denominator": d, "a_m_float": float(a)}
                for m, n, d, a in rows
            ]
        }
        return json.dumps(payload, indent=2) + "\n"
    if fmt == "csv":
        return _csv_text(header, rows)
    return _text_table(header, rows)


def _pmf_rows(family: str, x: float, max_k: int):
    if family == "flagship":
        dist = mean_param.MeanParamDistribution(x)
        pmfs = [dist.pmf(k) for k in range(max_k + 1)]
        printed = [dist.pmf_printed(k) for k in range(max_k + 1)]
    else:
        fam = families.get_family(family)
        try:
            y = families.y_for_mean(fam, x)
        except ValueError as exc:
            raise DomainError(str(exc)) from exc
        st = families.YParamState(fam, y)
        pmfs = [families.pmf_y(st, k) for k in range(max_k + 1)]
        printed = [None] * (max_k + 1)
    cdfs, _ = mean_param.compensated_cumsum(pmfs)
    rows = [
        (k, p, min(1.0, c), q, (p / q) if q else None)
        for k, (p, c, q) in enumerate(zip(pmfs, cdfs, printed))
    ]
    return rows, math.fsum(pmfs)


def cmd_pmf(x: float, max_k: int, fmt: str, family: str = "flagship") -> str:
    if not (x > 0 and math.isfinite(x)):
        raise DomainError("--x must be a finite positive number")
    if max_k < 0:
        raise DomainError("--max-k must be >= 0")
    rows, total = _pmf_rows(family, x, max_k)
    if fmt == "json":
        payload = {
            "family": family,
            "x": x,
            "rows": [
                {"k": k, "pmf": p, "cdf": c, "printed": q, "ratio": r} for k, p, c, q, r in rows
            ],
            "total": total,
        }
        return json.dumps(payload, indent=2) + "\n"

    def cell(v):
        return "" if v is None else fmt_float(v)

    header = ["k", "pmf", "cdf", "printed", "ratio"]
    body = [(k, cell(p), cell(c), cell(q), cell(r)) for k, p, c, q, r in rows]
    body.append(("total", cell(total), "", "", ""))
    if fmt == "csv":
        return _csv_text(header, body)
    return _text_table(header, body)


def cmd_moments(max_order: int, kind: str, fmt: str) -> str:
    if not 1 <= max_order <= moments.MAX_ORDER:
        raise DomainError(f"--max-order must be in [1, {moments.MAX_ORDER}]")
    polys = [moments.moment(kind, m) for m in range(1, max_order + 1)]
    if fmt == "json":
        return json.dumps([p.to_json() for p in polys], indent=2) + "\n"
    if fmt == "csv":
        rows = [(p.kind.value, p.order, i, c.numerator, c.denominator) for p in polys for i, c in enumerate(p.coeffs)]
        return _csv_text(["kind", "order", "power", "numerator", "denominator"], rows)
    return "".join(f"{kind}[{p.order}] = {p}\n" for p in polys)


def cmd_sample(n: int, x: float, seed: int, fmt: str) -> tuple[str, str]:
    """Return (body, summary line)."""
    if not (x > 0 and math.isfinite(x)):
        raise DomainError("--x must be a finite positive number")
    if n < 0:
        raise DomainError("--n must be >= 0")
    if not 0 <= seed < 2**64:
        raise DomainError("--seed must be a 64-bit unsigned integer")
    batch = mean_param.sample(n, x, seed)
    values = batch.values.tolist()
    mean, var = mean_param.batch_mean_var(values)
    summary = f"n={n} x={fmt_float(x)} seed={seed} mean={fmt_float(mean)} variance={fmt_float(var)}"
    if fmt == "json":
        body = json.dumps({"x": x, "seed": seed, "values": values}) + "\n"
    elif fmt == "csv":
        body = f"x={fmt_float(x)},seed={seed}\n" + "".join(f"{v}\n" for v in values)
    else:
        body = summary + "\n" + "".join(f"{v}\n" for v in values)
    return body, summary


def cmd_validate(xs: Sequence[float], fmt: str, color: bool = False) -> tuple[str, int]:
    if not xs:
        raise DomainError("--xs must be nonempty")
    for x in xs:
        if not (x > 0 and math.isfinite(x)):
            raise DomainError(f"x must be a finite positive number, got {x!r}")
    report = oracle.run_full_validation(xs)
    text = report.to_json() + "\n" if fmt == "json" else report.to_text(color=color) + "\n"
    return text, EXIT_OK if report.overall else EXIT_VALIDATION


# -- argument parsing ------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="psdist",
        description="Power series distribution of w(y) = (1 + sqrt(1-y))^(-1/2) under mean parameterization.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_format(p, default="text"):
        p.add_argument("--format", choices=("csv", "json", "text"), default=default, help=f"output format (default: {default})")

    p = sub.add_parser("coeffs", help="exact series coefficients r_m with a_m = r_m / sqrt(2)")
    p.add_argument("--max-m", type=int, default=10, help="largest index (default: 10, max 10000)")
    add_format(p, "csv")

    p = sub.add_parser("pmf", help="pmf/cdf table with the displayed closed form for comparison")
    p.add_argument("--x", type=float, required=True, help="mean parameter x > 0")
    p.add_argument("--max-k", type=int, default=20, help="largest k (default: 20)")
    p.add_argument("--family", choices=[f.name for f in families.example_registry()], default="flagship", help="family (default: flagship)")
    add_format(p, "csv")

    p = sub.add_parser("moments", help="exact moment/cumulant polynomials in x")
    p.add_argument("--max-order", type=int, default=4, help="highest order, 1..12 (default: 4)")
    p.add_argument("--kind", choices=[k.value for k in moments.Kind], default="raw", help="polynomial kind (default: raw)")
    add_format(p, "text")

    p = sub.add_parser("sample", help="seeded draws by inversion")
    p.add_argument("--n", type=int, default=10, help="number of draws (default: 10)")
    p.add_argument("--x", type=float, required=True, help="mean parameter x > 0")
    p.add_argument("--seed", type=int, default=0, help="64-bit unsigned seed (default: 0)")
    add_format(p, "csv")

    p = sub.add_parser("validate", help="run every oracle check; exit 1 on any failure")
    p.add_argument("--xs", type=float, nargs="+", default=[0.1, 1.0, 10.0], help="mean probes (default: 0.1 1 10)")
    add_format(p, "text")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    out = sys.stdout
    try:
        if args.command == "coeffs":
            out.write(cmd_coeffs(args.max_m, args.format))
        elif args.command == "pmf":
            out.write(cmd_pmf(args.x, args.max_k, args.format, args.family))
        elif args.command == "moments":
            out.write(cmd_moments(args.max_order, args.kind, args.format))
        elif args.command == "sample":
            body, summary = cmd_sample(args.n, args.x, args.seed, args.format)
            out.write(body)
            if args.format != "text":
                print(summary, file=sys.stderr)
        elif args.command == "validate":
            color = out.isatty() and "NO_COLOR" not in os.environ
            text, code = cmd_validate(args.xs, args.format, color)
            out.write(text)
            return code
    except ValueError as exc:
        # DomainError and the library's domain checks share ValueError
        print(f"psdist: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
