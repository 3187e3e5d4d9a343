"""Command-line front end.

Subcommands:

    catalog    list built-in systems
    spectrum   restricted eigenvalues and their scale-invariant values
    nodal      sign-changing profile from the second-constant minimization
    csc        positive constant-curvature profile at the critical exponent
    count      multiplicity lower bounds for products with an even sphere

Every command takes --format json|csv.  Exit codes: 0 success, 2 for
configuration or precondition problems, 3 for numerical failures.  The
default grid (2000 cells) can be overridden with ISOYAMABE_DEFAULT_GRID.
Systems are addressed by catalog name, file path, or the inline product
syntax `product:<base>+s<val>,v<val>,d<val>`.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import solver, system
from .conformal import yamabe_functional
from .discretize import assemble
from .errors import ConfigurationError, NoConvergence, NumericalError
from .exprlang import DomainError, ExprSyntaxError
from .spectral import eigs

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_DEFAULT_GRID = 2000


def default_grid() -> int:
    raw = os.environ.get("ISOYAMABE_DEFAULT_GRID")
    if raw is None:
        return _DEFAULT_GRID
    try:
        value = int(raw)
    except ValueError:
        raise ConfigurationError(
            f"ISOYAMABE_DEFAULT_GRID must be an integer, got {raw!r}") from None
    return value


def resolve_system(source: str) -> system.IsoparametricSystem:
    """Catalog name, `product:` inline syntax, or a definition-file path."""
    if source.startswith("product:"):
        return _parse_product(source)
    if source in system.catalog_names():
        return system.get_system(source)
    if os.path.exists(source):
        return system.load_system(source)
    raise ConfigurationError(
        f"unknown system {source!r}: not a catalog name "
        f"({', '.join(system.catalog_names())}), not a file")


def _parse_product(source: str) -> system.IsoparametricSystem:
    body = source[len("product:"):]
    if "+" not in body:
        raise ConfigurationError(
            "product syntax is product:<base>+s<val>,v<val>,d<val>")
    base_name, _, params = body.partition("+")
    base = resolve_system(base_name)
    fields = {}
    for part in params.split(","):
        part = part.strip()
        if not part or part[0] not in "svd":
            raise ConfigurationError(f"bad product parameter {part!r}")
        try:
            fields[part[0]] = float(part[1:])
        except ValueError:
            raise ConfigurationError(f"bad product parameter {part!r}") from None
    missing = {"s", "v", "d"} - set(fields)
    if missing:
        raise ConfigurationError(
            f"product syntax missing parameter(s): {', '.join(sorted(missing))}")
    if fields["d"] != int(fields["d"]):
        raise ConfigurationError("product dimension d must be an integer")
    return system.build_product(base, fields["s"], fields["v"], int(fields["d"]))


def _check_grid(n: int) -> int:
    if n < 16:
        raise ConfigurationError(f"grid below minimum 16: {n}")
    return n


def _operator(sys_obj, grid):
    return assemble(system.to_arclength(sys_obj), _check_grid(grid))


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def _emit_json(payload, out):
    json.dump(payload, out, indent=2)
    out.write("\n")


def _emit_csv(header, rows, out, preamble=()):
    for key, value in preamble:
        out.write(f"# {key} = {value}\n")
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(_fmt(x) for x in row) + "\n")


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _profile_rows(op, u):
    r = op.grid.nodes()
    t = op.t_nodes()
    return [(float(r[j]), float(t[j]), float(u[j])) for j in range(op.n)]


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_catalog(args, out):
    entries = []
    for name in system.catalog_names():
        sys_obj = system.get_system(name)
        entries.append({
            "name": name,
            "dim": sys_obj.dims.n,
            "kf": sys_obj.kf,
            "proper": sys_obj.proper,
            "interval": [sys_obj.t_min, sys_obj.t_max],
        })
    if args.format == "json":
        _emit_json(entries, out)
    else:
        _emit_csv(("name", "dim", "kf", "proper", "t_min", "t_max"),
                  [(e["name"], e["dim"], e["kf"], e["proper"],
                    e["interval"][0], e["interval"][1]) for e in entries], out)
    return EXIT_OK


def cmd_spectrum(args, out):
    sys_obj = resolve_system(args.system)
    op = _operator(sys_obj, args.grid)
    result = eigs(op, args.k)
    vol = system.integrate(sys_obj, 1.0)
    scale = vol ** (2.0 / sys_obj.dims.n)
    rows = [(k + 1, float(lam), float(lam) * scale)
            for k, lam in enumerate(result.eigenvalues)]
    if args.format == "json":
        _emit_json({
            "system": sys_obj.name,
            "grid": args.grid,
            "eigenvalues": [row[1] for row in rows],
            "yamabe_k_values": [row[2] for row in rows],
        }, out)
    else:
        _emit_csv(("index", "eigenvalue", "yamabe_k_value"), rows, out)
    return EXIT_OK


def cmd_nodal(args, out):
    sys_obj = resolve_system(args.system)
    op = _operator(sys_obj, args.grid)
    try:
        res = solver.minimize_second_yamabe(sys_obj, op, tol=args.tol)
    except NoConvergence as exc:
        if exc.last_iterate is not None:
            sys.stderr.write("# last iterate (r,t,u)\n")
            for row in _profile_rows(op, exc.last_iterate):
                sys.stderr.write(",".join(_fmt(x) for x in row) + "\n")
        raise
    nodal = res.sol.nodal
    summary = [
        ("system", sys_obj.name),
        ("Y2f", repr(res.Y2f)),
        ("c", repr(res.sol.c)),
        ("residual", repr(res.sol.residual)),
        ("sign_changes", nodal.sign_changes),
        ("nodal_t", " ".join(repr(x) for x in nodal.nodal_levels)),
        ("iterations", res.iterations),
    ]
    if args.format == "json":
        _emit_json({
            "system": sys_obj.name,
            "Y2f": res.Y2f,
            "c": res.sol.c,
            "residual": res.sol.residual,
            "sign_changes": nodal.sign_changes,
            "nodal_t": list(nodal.nodal_levels),
            "iterations": res.iterations,
            "profile": {
                "r": [row[0] for row in _profile_rows(op, res.v2)],
                "t": [row[1] for row in _profile_rows(op, res.v2)],
                "u": [float(x) for x in res.v2],
            },
        }, out)
    else:
        _emit_csv(("r", "t", "u"), _profile_rows(op, res.v2), out,
                  preamble=summary)
    return EXIT_OK


def cmd_csc(args, out):
    sys_obj = resolve_system(args.system)
    sys_obj.dims.require_yamabe()
    op = _operator(sys_obj, args.grid)
    s_exp = sys_obj.dims.p_n
    try:
        sol = solver.solve_subcritical(sys_obj, op, s_exp, tol=args.tol)
    except NoConvergence as exc:
        if exc.last_iterate is not None:
            sys.stderr.write("# last iterate (r,t,u)\n")
            for row in _profile_rows(op, exc.last_iterate):
                sys.stderr.write(",".join(_fmt(x) for x in row) + "\n")
        raise
    constant_j = yamabe_functional(sys_obj, op, np.ones(op.n), s_exp)
    summary = [
        ("system", sys_obj.name),
        ("exponent", repr(s_exp)),
        ("c", repr(sol.c)),
        ("functional", repr(sol.functional_value)),
        ("constant_profile_functional", repr(constant_j)),
        ("residual", repr(sol.residual)),
    ]
    if args.format == "json":
        _emit_json({
            "system": sys_obj.name,
            "exponent": s_exp,
            "c": sol.c,
            "functional": sol.functional_value,
            "constant_profile_functional": constant_j,
            "residual": sol.residual,
            "profile": {
                "r": [row[0] for row in _profile_rows(op, sol.u)],
                "t": [row[1] for row in _profile_rows(op, sol.u)],
                "u": [float(x) for x in sol.u],
            },
        }, out)
    else:
        _emit_csv(("r", "t", "u"), _profile_rows(op, sol.u), out,
                  preamble=summary)
    return EXIT_OK


def _parse_sweep(spec: str):
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigurationError(f"sweep must be start:stop:num, got {spec!r}")
    try:
        start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigurationError(f"sweep must be start:stop:num, got {spec!r}") from None
    if num < 1 or start <= 0 or stop <= 0:
        raise ConfigurationError("sweep needs positive endpoints and num >= 1")
    return np.linspace(start, stop, num)


def cmd_count(args, out):
    if args.n % 2 != 0 or args.n < 2:
        raise ConfigurationError(
            f"--n must be an even sphere dimension >= 2, got {args.n}")
    s_half = args.n // 2
    if args.t is None and args.sweep is None:
        raise ConfigurationError("count needs --t or --sweep")
    ts = _parse_sweep(args.sweep) if args.sweep else [args.t]
    results = [(float(t), solver.csc_count_lower_bound(s_half, args.m, float(t)))
               for t in ts]
    if args.format == "json":
        _emit_json([{
            "t": t, "l": res.l, "i": res.i, "count": res.count,
            "thresholds": list(res.thresholds),
        } for t, res in results], out)
    else:
        preamble = []
        if len(results) == 1:
            preamble = [("thresholds",
                         " ".join(repr(x) for x in results[0][1].thresholds))]
        _emit_csv(("t", "l", "i", "count"),
                  [(t, res.l, res.i, res.count) for t, res in results], out,
                  preamble=preamble)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isoyamabe",
        description="spectra and constant/sign-changing curvature profiles "
                    "of foliated systems reduced to one dimension")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, grid=True, tol=False):
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        if grid:
            p.add_argument("--grid", type=int, default=None,
                           help="number of cells (default 2000 or "
                                "ISOYAMABE_DEFAULT_GRID)")
        if tol:
            p.add_argument("--tol", type=float, default=1e-8)

    p = sub.add_parser("catalog", help="list built-in systems")
    add_common(p, grid=False)

    p = sub.add_parser("spectrum", help="restricted spectrum table")
    p.add_argument("--system", required=True)
    p.add_argument("--k", type=int, required=True)
    add_common(p)

    p = sub.add_parser("nodal", help="sign-changing profile via the "
                                     "second-constant minimization")
    p.add_argument("--system", required=True)
    add_common(p, tol=True)

    p = sub.add_parser("csc", help="positive constant-curvature profile at "
                                   "the critical exponent")
    p.add_argument("--system", required=True)
    add_common(p, tol=True)

    p = sub.add_parser("count", help="multiplicity lower bounds for products "
                                     "with an even sphere")
    p.add_argument("--n", type=int, required=True,
                   help="even sphere dimension 2s")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--sweep", type=str, default=None,
                   help="start:stop:num range for t")
    add_common(p, grid=False)

    return parser


_COMMANDS = {
    "catalog": cmd_catalog,
    "spectrum": cmd_spectrum,
    "nodal": cmd_nodal,
    "csc": cmd_csc,
    "count": cmd_count,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    if getattr(args, "grid", None) is None and hasattr(args, "grid"):
        try:
            args.grid = default_grid()
        except ConfigurationError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    if getattr(args, "tol", None) is not None and not 0 < args.tol < 1:
        print(f"error: tolerance must be in (0, 1), got {args.tol}",
              file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _COMMANDS[args.command](args, sys.stdout)
    except (ConfigurationError, ExprSyntaxError, DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
