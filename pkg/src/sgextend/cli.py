"""Command-line front end.

Exit status: 0 on success, 1 on usage or input errors, 2 when a
verification report contains a mismatch.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from numbers import Rational
from pathlib import Path
from typing import Iterable, Sequence

from . import biharmonic, core, energy, haar, special, trace

EXACT_MAX_LEVEL = 6
FLOAT_MAX_LEVEL = 10

EXIT_OK, EXIT_USAGE, EXIT_MISMATCH = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, Rational):
        x = Fraction(x)
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def _jsonable(x):
    if isinstance(x, (bool, int)):
        return x
    if isinstance(x, (Rational, float)):
        return fmt(x)
    return str(x)


def emit(rows: Sequence[dict], out, as_json: bool) -> None:
    if as_json:
        json.dump([{k: _jsonable(v) for k, v in r.items()} for r in rows], out, indent=1)
        out.write("\n")
        return
    if not rows:
        return
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(rows[0].keys())
    for r in rows:
        writer.writerow(fmt(v) for v in r.values())


def write_plot_data(path: str, points: Iterable[tuple]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "y"])
        for x, y in points:
            writer.writerow([format(float(x), ".12g"), format(float(y), ".12g")])


def _level(value: str, cap: int = EXACT_MAX_LEVEL, low: int = 0) -> int:
    try:
        m = int(value)
    except ValueError:
        raise UsageError(f"level must be an integer, got {value!r}") from None
    if not low <= m <= cap:
        raise UsageError(f"level {m} outside supported range {low}..{cap}")
    return m


def _number(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a number: {text!r}") from None


def _address(text: str, m: int) -> core.VertexId:
    v = core.parse_address(text.strip(), level=None)
    if v.level > m:
        raise UsageError(f"{text} is not a point of V_{m}")
    return v.lift(m)


def _constraints(items: Sequence[str], m: int) -> dict:
    out = {}
    for item in items:
        if "=" not in item:
            raise UsageError(f"constraint must read addr=value, got {item!r}")
        addr, val = item.split("=", 1)
        v = _address(addr, m)
        if v in out:
            raise UsageError(f"duplicate constraint at {v}")
        out[v] = _number(val)
    return out


def _read_point_file(path: str, m: int) -> dict:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such file: {path}")
    out = {}
    with p.open(newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#") or row[0].strip() == "address":
                continue
            if len(row) != 2:
                raise UsageError(f"{path}: expected address,value rows")
            out[_address(row[0], m)] = _number(row[1])
    return out


# --- subcommands -------------------------------------------------------------

def cmd_graph(args, out) -> int:
    m = _level(args.level, FLOAT_MAX_LEVEL)
    g = core.build_level_graph(m)
    w = core.measure_weights(m)
    rows = [
        {"address": v, "degree": len(g.neighbors[i]), "weight": w[v]}
        for i, v in enumerate(g.vertices)
    ]
    if not args.json:
        out.write(f"# level {m}: {len(g)} vertices, {len(g.edges)} edges, conductance {fmt(g.conductance)}\n")
    emit(rows, out, args.json)
    return EXIT_OK


def cmd_trace(args, out) -> int:
    m = _level(args.level)
    keep = [_address(a, m) for a in args.keep.split(",") if a.strip()]
    if len(set(keep)) < 2:
        raise UsageError("keep at least two distinct points")
    net = trace.effective_form(m, keep)
    rows = [{"x": x, "y": y, "c": c} for x, y, c in net.pairs()]
    emit(rows, out, args.json)
    return EXIT_OK


def cmd_extend(args, out) -> int:
    lam = _number(args.lam)
    exact_ok = lam == 0
    m = _level(args.level, EXACT_MAX_LEVEL if exact_ok else FLOAT_MAX_LEVEL)
    cons = _constraints(args.constraint, m)
    if not cons:
        raise UsageError("give at least one --constraint")
    try:
        prob = energy.ExtensionProblem(m, cons, lam=lam if exact_ok else float(lam), dirichlet=args.dirichlet)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    u = energy.minimize_energy_lambda(prob)
    rows = [{"address": v, "value": x} for v, x in zip(u.graph.vertices, u.values)]
    emit(rows, out, args.json or args.out == "json")
    return EXIT_OK


def cmd_resolvent(args, out) -> int:
    lam = _number(args.lam)
    m = _level(args.level, FLOAT_MAX_LEVEL)
    cons = _constraints(args.constraint, m)
    if not cons:
        raise UsageError("give at least one --constraint")
    if any(v.is_boundary() for v in cons):
        raise UsageError("resolvent points must avoid V_0")
    exact = lam == 0 and m <= EXACT_MAX_LEVEL
    pts = list(cons)
    sol = energy.resolvent_construct(pts, [cons[p] for p in pts], lam if exact else float(lam), m, exact=exact)
    rows = [{"point": p, "value": cons[p], "coefficient": c} for p, c in zip(pts, sol.coefficients)]
    emit(rows, out, args.json)
    if not args.json:
        out.write(f"# objective {fmt(sol.value)}\n")
    return EXIT_OK


def cmd_bottom(args, out) -> int:
    n = _level(args.level, low=1)
    with_top = not args.no_top
    expected = special.bottom_row_coeffs(n, with_top=with_top)
    row = core.bottom_row(n)
    pts = ([core.boundary_point(0, n)] if with_top else []) + row
    net = trace.effective_form(n, pts)
    rows = []
    for x, y, c in net.pairs():
        e = expected.get((x, y), expected.get((y, x)))
        rows.append({"x": x, "y": y, "expected": "uncovered" if e is None else e, "oracle": c,
                     "match": "n/a" if e is None else e == c})
    emit(rows, out, args.json)
    if args.plot_data:
        write_plot_data(args.plot_data, ((Fraction(j, 2**n), net[row[0], row[j]]) for j in range(1, len(row))))
    return EXIT_MISMATCH if any(r["match"] is False for r in rows) else EXIT_OK


def _bottom_values(args, m: int) -> tuple:
    if args.values is None:
        raise UsageError("give --values")
    src = args.values
    if Path(src).is_file():
        text = Path(src).read_text()
        parts = [p for line in text.splitlines() for p in line.split(",") if p.strip()]
    else:
        parts = [p for p in src.split(",") if p.strip()]
    t = tuple(_number(p) for p in parts)
    if len(t) != 2**m + 1:
        raise UsageError(f"level {m} needs {2**m + 1} bottom values, got {len(t)}")
    return t


def cmd_haar(args, out) -> int:
    m = _level(args.level, low=1)
    if args.gamma_table:
        rows = []
        for level in range(1, m + 1):
            dec = haar.gamma_decomposition(level)
            for n, gam in dec.gamma.items():
                rows.append({"m": level, "n": n, "gamma": gam, "expected": haar.gamma_expected(level, n),
                             "match": gam == haar.gamma_expected(level, n)})
        emit(rows, out, args.json)
        if args.plot_data:
            write_plot_data(args.plot_data, ((r["m"], r["gamma"]) for r in rows if r["n"] == 0))
        return EXIT_MISMATCH if not all(r["match"] for r in rows) else EXIT_OK
    data = haar.BottomData(m, _bottom_values(args, m))
    gamma = haar.gamma_decomposition(m).gamma
    rows = [
        {"n": n, "k": k, "D": haar.haar_coefficient(data, n, k), "D2": haar.haar_coefficient_squared(data, n, k),
         "gamma": gamma[n]}
        for n in range(m + 1)
        for k in range(2**n)
    ]
    emit(rows, out, args.json)
    if not args.json:
        out.write(f"# energy {fmt(haar.bottom_energy(data))}\n")
    if args.plot_data:
        write_plot_data(args.plot_data, ((Fraction(j, 2**m), t) for j, t in enumerate(data.t)))
    return EXIT_OK


def cmd_biharm(args, out) -> int:
    m = _level(args.level, low=0, cap=4)
    values = _read_point_file(args.values, m)
    normals = _read_point_file(args.normals, m) if args.normals else {}
    if args.values_only and normals:
        raise UsageError("--values-only excludes --normals")
    prob = biharmonic.SplineProblem(m, values, normals, values_only=args.values_only)
    sol = biharmonic.spline_solve(prob)
    rows = []
    for word, d in sol.cells.items():
        rows.append({
            "word": "".join(map(str, word)),
            **{f"a{i}": d.a[i] for i in range(3)},
            **{f"b{i}": d.b[i] for i in range(3)},
            **{f"c{i}": d.c[i] for i in range(3)},
            "theta": biharmonic.theta(d.a, d.b),
        })
    emit(rows, out, args.json)
    status = EXIT_OK
    g = core.build_level_graph(m)
    if args.values_only and set(values) == set(g.vertices):
        vo = biharmonic.values_only_solve(energy.NodeFunction.from_mapping(m, values))
        if vo.T != sol.T:
            status = EXIT_MISMATCH
            sys.stderr.write(f"values-only T {fmt(vo.T)} differs from spline T {fmt(sol.T)}\n")
    if not args.json:
        out.write(f"# T {fmt(sol.T)}\n")
    return status


def _verify_rows(family: str, k: int) -> list[dict]:
    rows = []
    if family == "beta":
        for m in range(k + 1):
            pts = special.beta_points(m)
            net = trace.effective_form(m + 2, pts)
            for x, y, c in net.pairs():
                e = special.beta_expected(m, x, y)
                rows.append({"level": m, "x": x, "y": y, "expected": e, "oracle": c, "match": e == c})
    elif family == "newlevel":
        for n in range(1, k + 1):
            pts = special.new_level_points(n)
            net = trace.effective_form(n, pts)
            for x, y, c in net.pairs():
                e = special.new_level_expected(n, x, y)
                rows.append({"level": n, "x": x, "y": y, "expected": "uncovered" if e is None else e,
                             "oracle": c, "match": "n/a" if e is None else e == c})
    elif family == "bottom":
        for n in range(1, k + 1):
            for with_top in (True, False):
                exp = special.bottom_row_coeffs(n, with_top=with_top)
                pts = ([core.boundary_point(0, n)] if with_top else []) + core.bottom_row(n)
                net = trace.effective_form(n, pts)
                for (x, y), e in exp.items():
                    c = net[x, y]
                    rows.append({"level": n, "x": x, "y": y, "expected": e, "oracle": c, "match": e == c})
    elif family == "haar":
        for m in range(1, k + 1):
            for n, gam in haar.gamma_decomposition(m).gamma.items():
                e = haar.gamma_expected(m, n)
                rows.append({"level": m, "x": f"n={n}", "y": "", "expected": e, "oracle": gam, "match": e == gam})
    elif family == "phi":
        for m in range(1, k + 1):
            p = haar.phi_bump(m)
            for name, e, c in (("b", haar.phi_b_closed(m), p.b), ("c", haar.phi_c_closed(m), p.c)):
                rows.append({"level": m, "x": name, "y": "", "expected": e, "oracle": c, "match": e == c})
    return rows


VERIFY_CAPS = {"beta": 2, "newlevel": 4, "bottom": EXACT_MAX_LEVEL, "haar": EXACT_MAX_LEVEL, "phi": FLOAT_MAX_LEVEL}


def cmd_verify(args, out) -> int:
    k = _level(args.max_level, cap=VERIFY_CAPS[args.family])
    rows = _verify_rows(args.family, k)
    emit(rows, out, args.json or args.report == "json")
    return EXIT_MISMATCH if any(r["match"] is False for r in rows) else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sgextend", description="Extension problems on the Sierpinski gasket.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        s = sub.add_parser(name, help=help_)
        s.set_defaults(func=func)
        s.add_argument("--json", action="store_true", help="emit JSON instead of CSV")
        return s

    s = add("graph", cmd_graph, "vertices of V_m with degrees and measure weights")
    s.add_argument("--level", required=True)

    s = add("trace", cmd_trace, "traced energy form on a point set")
    s.add_argument("--level", required=True)
    s.add_argument("--keep", required=True, help="comma-separated addresses such as ':q0,0:q1'")
    s.add_argument("--out", choices=["csv"], default="csv")

    s = add("extend", cmd_extend, "minimize E + lambda int u^2 under point constraints")
    s.add_argument("--level", required=True)
    s.add_argument("--lambda", dest="lam", default="0")
    s.add_argument("--constraint", action="append", default=[], help="addr=value, repeatable")
    s.add_argument("--dirichlet", action="store_true")
    s.add_argument("--out", choices=["csv", "json"], default="csv")

    s = add("resolvent", cmd_resolvent, "Dirichlet E_lambda minimizer from resolvent columns")
    s.add_argument("--level", required=True)
    s.add_argument("--lambda", dest="lam", default="0")
    s.add_argument("--constraint", action="append", default=[])

    s = add("bottom", cmd_bottom, "bottom-row coefficients against the closed forms")
    s.add_argument("--level", required=True)
    s.add_argument("--no-top", action="store_true", help="eliminate the top point q0")
    s.add_argument("--plot-data", help="write (x_j, c_{x_0,x_j}) to this CSV")

    s = add("haar", cmd_haar, "Haar coefficients and gamma per level")
    s.add_argument("--level", required=True)
    s.add_argument("--values", help="comma-separated bottom values or a file holding them")
    s.add_argument("--gamma-table", action="store_true")
    s.add_argument("--out", choices=["csv"], default="csv")
    s.add_argument("--plot-data", help="write bottom profile or gamma-vs-m curve to this CSV")

    s = add("biharm", cmd_biharm, "biharmonic spline through values (and normal derivatives)")
    s.add_argument("--level", required=True)
    s.add_argument("--values", required=True, help="CSV of address,value")
    group = s.add_mutually_exclusive_group()
    group.add_argument("--normals", help="CSV of address,normal derivative")
    group.add_argument("--values-only", action="store_true")
    s.add_argument("--out", choices=["csv"], default="csv")

    s = add("verify", cmd_verify, "compare closed forms with exact network reduction")
    s.add_argument("--family", required=True, choices=sorted(VERIFY_CAPS))
    s.add_argument("--max-level", required=True)
    s.add_argument("--report", choices=["csv", "json"], default="csv")
    return p


def run(argv: Sequence[str] | None = None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        buf = io.StringIO()
        status = args.func(args, buf)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except (core.AddressError, trace.NetworkError, special.PointSetError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    out.write(buf.getvalue())
    return status


def main() -> None:
    sys.exit(run())
