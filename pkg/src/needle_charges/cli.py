"""Command-line entry point: ``needle-charges {solve,simulate,table,fieldmap}``.

Every command writes its data files plus a ``manifest_<command>.json`` into
the output directory (``--out``, else $NEEDLE_CHARGES_OUT, else ./out).
Exit codes: 0 success, 2 validation error, 3 convergence failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import functools
import json
import logging
import os
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .config import ChargeConfiguration, ClosedSimplexPoint, equispaced, from_text
from .distribution import (
    DyadicTarget,
    EmpiricalCdf,
    cdf_rows,
    dyadic_family,
    dyadic_index,
    gap_stats,
    sup_distance_to_uniform,
)
from .dynamics import INITIAL_CONDITIONS, DynamicsSpec, System, flow_to_equilibrium, simulate
from .equilibrium import solve, solve_fixed_point, solve_gradient_descent
from .errors import ConvergenceError, NeedleError, ValidationError
from .export import trajectory_table, write_csv, write_json, write_positions
from .field import field_map, nearest_charge_ratios, partial_force_sum, uniform_net_field

log = logging.getLogger("needle_charges")

ENV_OUT = "NEEDLE_CHARGES_OUT"
EXIT_VALIDATION, EXIT_CONVERGENCE, EXIT_IO = 2, 3, 4


# -- argument parsing helpers ----------------------------------------------------

def parse_int_list(text: str) -> list[int]:
    """'5,9,17' or '2..8' (inclusive) or a mix: '2..4,9'."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def parse_float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def parse_gammas(text: str) -> list[DyadicTarget]:
    return [DyadicTarget.from_fraction(Fraction(v.strip())) for v in text.split(",") if v.strip()]


def parse_region(text: str) -> tuple[tuple[float, float], tuple[float, float]]:
    try:
        xr, yr = text.split(",")
        x0, x1 = (float(v) for v in xr.split(":"))
        y0, y1 = (float(v) for v in yr.split(":"))
    except ValueError as exc:
        raise ValidationError(f"region must look like x0:x1,y0:y1, got {text!r}") from exc
    return (x0, x1), (y0, y1)


def parse_resolution(text: str) -> tuple[int, int]:
    try:
        nx, ny = (int(v) for v in text.lower().split("x"))
    except ValueError as exc:
        raise ValidationError(f"resolution must look like 40x20, got {text!r}") from exc
    if nx < 1 or ny < 1:
        raise ValidationError("resolution must be positive")
    return nx, ny


def _tag(t: float) -> str:
    return format(t, "g").replace(".", "p")


@functools.lru_cache(maxsize=None)
def _solve_cached(n: int):
    return solve(n)


# -- commands -----------------------------------------------------------------

def cmd_solve(args, out: Path) -> tuple[dict, list[Path]]:
    n = args.n
    if n < 3:
        raise ValidationError(f"solve needs n >= 3, got {n}")
    if args.method == "hybrid":
        report = solve(n, tol=args.tol)
    elif args.method == "descent":
        report = solve_gradient_descent(equispaced(n).interior, tol=args.tol)
    elif args.method == "fixed-point":
        report = solve_fixed_point(ClosedSimplexPoint(equispaced(n).positions), max_iter=args.max_iter,
                                   tol=args.tol or 1e-6)
    else:
        report = flow_to_equilibrium(n, tol=args.tol or 1e-9)
    paths = [
        write_json(out / f"equilibrium_n{n}.json", report.to_dict()),
        write_positions(out / f"positions_n{n}.txt", report.configuration),
    ]
    if args.plot:
        from . import plotting

        paths.append(plotting.equilibrium_figure(report.positions, out / f"equilibrium_n{n}.png"))
    return {"residual": report.residual, "iterations": report.iterations}, paths


def _initial(args) -> ChargeConfiguration:
    if args.init == "file":
        if not args.init_file:
            raise ValidationError("--init file requires --init-file")
        config = from_text(Path(args.init_file).read_text(encoding="utf-8"))
        if args.n is not None and config.n != args.n:
            raise ValidationError(f"--init-file holds {config.n} charges, --n says {args.n}")
        return config
    if args.n is None:
        raise ValidationError("--n is required unless --init file is used")
    return INITIAL_CONDITIONS[args.init](args.n)


def cmd_simulate(args, out: Path) -> tuple[dict, list[Path]]:
    system = System.NEWTONIAN if args.system == "newton" else System.GRADIENT_FLOW
    start = _initial(args)
    spec = DynamicsSpec(system, start, args.horizon, args.step)
    traj = simulate(spec)
    n = start.n
    stem = f"trajectory_{args.system}_n{n}"
    header, rows = trajectory_table(traj)
    paths = [write_csv(out / f"{stem}.csv", header, rows)]
    snapshots = []
    for t in parse_float_list(args.cdf_snapshots or ""):
        if not 0 <= t <= args.horizon:
            raise ValidationError(f"snapshot time {t} outside [0, {args.horizon}]")
        k = int(np.argmin(np.abs(traj.times - t)))
        cdf = EmpiricalCdf(traj.positions[k])
        snapshots.append((float(traj.times[k]), cdf))
        paths.append(write_csv(out / f"cdf_{args.system}_n{n}_t{_tag(t)}.csv", ["x", "F(x)"], cdf_rows(cdf)))
    if args.plot:
        from . import plotting

        paths.append(plotting.trajectory_figure(traj.times, traj.positions, out / f"{stem}.png",
                                                title=f"{system.value}, n = {n}"))
        if snapshots:
            curves = [(f"t = {t:g}", cdf.jump_points) for t, cdf in snapshots]
            paths.append(plotting.cdf_figure(curves, out / f"cdf_{args.system}_n{n}.png"))
    summary = {"samples": int(traj.times.size),
               "snapshot_sup_distance": [sup_distance_to_uniform(c) for _, c in snapshots]}
    return summary, paths


def _table_dyadic(args):
    gammas = parse_gammas(args.gammas)
    min_k = max([args.min_k] + [g.s for g in gammas])
    rows = []
    for n in dyadic_family(min_k, args.max_k):
        x = _solve_cached(n).positions
        for g in gammas:
            idx = dyadic_index(n, g)
            rows.append((n, str(g), idx, float(x[idx - 1])))
    return ["n", "gamma", "index", "position"], rows


def _table_ratio(args):
    rows = []
    for n in parse_int_list(args.ns or "5,9,17,33"):
        a = _solve_cached(n).positions[1]
        b = _solve_cached(2 * n - 1).positions[1]
        rows.append((n, float(a), float(b), float(a / b)))
    return ["n", "x_n_2", "x_2n-1_2", "ratio"], rows


def _table_gaps(args):
    rows = []
    for n in dyadic_family(args.min_k, args.max_k):
        config = _solve_cached(n).configuration
        st = gap_stats(config)
        rows.append((n, st.min_gap, st.max_gap, st.ratio, st.spread,
                     sup_distance_to_uniform(EmpiricalCdf.from_configuration(config))))
    return ["n", "min_gap", "max_gap", "ratio", "spread", "sup_distance"], rows


def _table_qfactors(args):
    rows = []
    for n in parse_int_list(args.ns or f"{args.s + 1}..10"):
        r = nearest_charge_ratios(args.q, args.s, n)
        p = partial_force_sum(args.q, args.s, n)
        f = uniform_net_field(args.q, args.s, n)
        rows.append((n, r.q_minus.finite, r.q_minus.closed, r.q_plus.finite, r.q_plus.closed,
                     p.finite, p.closed, f.finite, f.closed))
    header = ["n", "q_minus_sum", "q_minus_closed", "q_plus_sum", "q_plus_closed",
              "partial_sum", "partial_closed", "net_sum", "net_closed"]
    return header, rows


TABLES = {"dyadic": _table_dyadic, "ratio": _table_ratio, "gaps": _table_gaps, "qfactors": _table_qfactors}


def cmd_table(args, out: Path) -> tuple[dict, list[Path]]:
    header, rows = TABLES[args.kind](args)
    paths = [write_csv(out / f"table_{args.kind}.csv", header, rows)]
    if args.plot:
        from . import plotting

        png = out / f"table_{args.kind}.png"
        if args.kind == "dyadic":
            paths.append(plotting.dyadic_figure(rows, png))
            ns = sorted({r[0] for r in rows})
            curves = [(f"n = {n}", _solve_cached(n).positions) for n in ns]
            paths.append(plotting.cdf_figure(curves, out / "table_dyadic_cdf.png"))
        elif args.kind == "ratio":
            paths.append(plotting.series_figure([r[0] for r in rows], {"ratio": [r[3] for r in rows]}, png,
                                                "n", "X(n,2) / X(2n-1,2)", logx=True, reference=2.0))
        elif args.kind == "gaps":
            paths.append(plotting.series_figure([r[0] for r in rows], {"max gap / min gap": [r[3] for r in rows]},
                                                png, "number of charges", "gap ratio", logx=True))
        else:
            series = {"Q-": [r[1] for r in rows], "Q+": [r[3] for r in rows]}
            paths.append(plotting.series_figure([r[0] for r in rows], series, png, "n", "ratio", logy=True))
    return {"rows": len(rows)}, paths


def cmd_fieldmap(args, out: Path) -> tuple[dict, list[Path]]:
    (x0, x1), (y0, y1) = parse_region(args.region)
    nx, ny = parse_resolution(args.res)
    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    if args.source == "continuous":
        sources = [("uniform", None)]
        stem = "fieldmap_continuous"
    else:
        if args.n is None or args.n < 2:
            raise ValidationError("discrete sources need --n >= 2")
        config = _solve_cached(args.n).configuration if args.source == "discrete-equilibrium" else equispaced(args.n)
        sources = [("discrete", config)]
        if args.with_continuous:
            sources.append(("uniform", None))
        stem = f"fieldmap_{args.source}_n{args.n}"
    rows = []
    skipped = 0
    for label, src in sources:
        part, k = field_map(src, xs, ys)
        rows.extend(r + (label,) for r in part)
        skipped += k
    paths = [write_csv(out / f"{stem}.csv", ["x", "y", "Ex", "Ey", "source"], rows)]
    if args.plot:
        from . import plotting

        paths.append(plotting.fieldmap_figure(rows, out / f"{stem}.png"))
    warnings = []
    if skipped:
        warnings.append(f"skipped {skipped} grid points lying on the needle")
        log.warning(warnings[-1])
    return {"rows": len(rows), "skipped_on_needle": skipped, "warnings": warnings}, paths


COMMANDS = {"solve": cmd_solve, "simulate": cmd_simulate, "table": cmd_table, "fieldmap": cmd_fieldmap}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="needle-charges", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=None, help=f"output directory (default ${ENV_OUT} or ./out)")
    common.add_argument("--plot", action="store_true", help="also render PNG figures next to the data")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="equilibrium positions for n charges")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--method", choices=["hybrid", "descent", "fixed-point", "flow"], default="hybrid")
    p.add_argument("--max-iter", type=int, default=100_000, help="fixed-point iteration cap")

    p = sub.add_parser("simulate", parents=[common], help="integrate the Newtonian system or the gradient flow")
    p.add_argument("--system", choices=["newton", "flow"], default="newton")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--init", choices=sorted(INITIAL_CONDITIONS) + ["file"], default="equispaced")
    p.add_argument("--init-file", default=None, help="positions file, one value per line")
    p.add_argument("--horizon", type=float, default=20.0)
    p.add_argument("--step", type=float, default=0.01, help="sampling step of the stored trajectory")
    p.add_argument("--cdf-snapshots", default=None, help="comma-separated times, e.g. 1,2,3")

    p = sub.add_parser("table", parents=[common], help="reproduce the tabulated quantities")
    p.add_argument("--kind", choices=sorted(TABLES), required=True)
    p.add_argument("--gammas", default="1/4,5/8")
    p.add_argument("--min-k", type=int, default=3)
    p.add_argument("--max-k", type=int, default=8)
    p.add_argument("--ns", default=None, help="list like 5,9,17 or range like 2..8")
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--s", type=int, default=1)

    p = sub.add_parser("fieldmap", parents=[common], help="field vectors on a grid in the z = 0 plane")
    p.add_argument("--source", choices=["discrete-equilibrium", "discrete-uniform", "continuous"], required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--region", default="-0.5:1.5,0.05:1")
    p.add_argument("--res", default="40x20")
    p.add_argument("--with-continuous", action="store_true", help="add uniform-density rows for comparison")
    return parser


def _glue_region(argv: list[str]) -> list[str]:
    # argparse reads "--region -0.5:1.5,..." as two flags; glue the value on
    out = []
    it = iter(argv)
    for a in it:
        if a == "--region":
            out.append("--region=" + next(it, ""))
        else:
            out.append(a)
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_glue_region(argv))
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = args.out or Path(os.environ.get(ENV_OUT, "out"))
    params = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()
              if k not in ("command", "verbose", "out")}
    started = time.perf_counter()
    try:
        summary, paths = COMMANDS[args.command](args, out)
        warnings = summary.pop("warnings", [])
        manifest = {
            "command": args.command,
            "parameters": params,
            "output_paths": [str(p) for p in paths],
            "summary": summary,
            "tool_version": __version__,
            "wall_time": time.perf_counter() - started,
            "warnings": warnings,
        }
        write_json(out / f"manifest_{args.command}.json", manifest)
    except ValidationError as exc:
        return _fail(exc, EXIT_VALIDATION)
    except ConvergenceError as exc:
        return _fail(exc, EXIT_CONVERGENCE)
    except OSError as exc:
        return _fail(exc, EXIT_IO)
    except NeedleError as exc:
        return _fail(exc, EXIT_VALIDATION)
    for p in paths:
        print(p)
    return 0


def _fail(exc: Exception, code: int) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    report = getattr(exc, "report", None)
    if report is not None:
        payload["report"] = report.to_dict()
    print(json.dumps(payload), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
