"""Command-line front end.

Modes:
    solve              one run at a fixed penalty
    sweep              run the default (or given) penalty grid and aggregate
    check-derivatives  finite-difference validation of a problem's derivatives
    diagnose           regularity report at a certified or computed point

Exit codes: 0 success/converged, 2 solver non-convergence, 1 usage or
evaluation errors.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import reporting
from .problem import EvaluationError, check_derivatives
from .problems import BenchmarkEntry, get_entry, problem_names
from .regularity import InconsistentPoint, diagnose
from .solver import EVALUATION_FAILED, SOLVED, SolverConfig, run
from .sweep import (DEFAULT_LAMBDA_GRID, SweepConfig, default_start,
                    delta_metrics, resolve_start, sweep)

MODES = ("solve", "sweep", "check-derivatives", "diagnose")


def _float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bilevel-newton",
        description="Semismooth Newton solver for optimistic bilevel programs "
                    "via value-function penalization.",
    )
    parser.add_argument("mode_pos", nargs="?", choices=MODES, metavar="mode",
                        help=f"one of: {', '.join(MODES)}")
    parser.add_argument("--mode", choices=MODES, help="alternative to the positional mode")
    parser.add_argument("--problem", required=True,
                        help=f"benchmark problem name; one of: {', '.join(problem_names())}")
    parser.add_argument("--lambda", dest="lam", type=float, default=1.0,
                        help="penalty parameter for solve/diagnose (default 1.0)")
    parser.add_argument("--lambda-grid", type=_float_list, default=None,
                        help="comma-separated penalties for sweep (default 0.5,1,...,128)")
    parser.add_argument("--max-iter", type=int, default=2000)
    parser.add_argument("--eps", type=float, default=1e-8)
    parser.add_argument("--beta", type=float, default=1e-8)
    parser.add_argument("--t", type=float, default=2.1)
    parser.add_argument("--rho", type=float, default=0.5)
    parser.add_argument("--sigma", type=float, default=1e-4)
    parser.add_argument("--max-backtracks", type=int, default=60)
    parser.add_argument("--kink-tol", type=float, default=1e-12)
    parser.add_argument("--pivot-tol", type=float, default=1e-12)
    parser.add_argument("--grad-stall-tol", type=float, default=1e-12)
    parser.add_argument("--x0", type=_float_list, default=None,
                        help="override the upper-level starting point (comma-separated)")
    parser.add_argument("--y0", type=_float_list, default=None,
                        help="override the lower-level starting point (comma-separated)")
    parser.add_argument("--parallel", action="store_true", help="run sweep penalties concurrently")
    parser.add_argument("--out", default=None, help="output file (default: stdout)")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    return parser


def _solver_config(args, lam: float) -> SolverConfig:
    return SolverConfig(
        lam=lam,
        beta=args.beta,
        eps=args.eps,
        t=args.t,
        rho=args.rho,
        sigma=args.sigma,
        max_iter=args.max_iter,
        max_backtracks=args.max_backtracks,
        kink_tol=args.kink_tol,
        pivot_tol=args.pivot_tol,
        grad_stall_tol=args.grad_stall_tol,
    )


def _start_iterate(entry: BenchmarkEntry, args):
    problem = entry.problem
    if args.x0 is None and args.y0 is None:
        return resolve_start(problem)
    d = problem.dims
    x0 = np.asarray(args.x0 if args.x0 is not None else np.ones(d.n), dtype=float)
    y0 = np.asarray(args.y0 if args.y0 is not None else np.ones(d.m), dtype=float)
    return default_start(problem, x0, y0)


def _emit(text: str, out_path: str | None):
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w") as fh:
            fh.write(text)


def _cmd_solve(entry: BenchmarkEntry, args) -> int:
    report = run(entry.problem, _solver_config(args, args.lam), _start_iterate(entry, args))
    deltas = delta_metrics(report.F, report.f, entry.problem.known_F, entry.problem.known_f, entry.status)
    if args.format == "csv":
        _emit(reporting.solve_report_to_csv(report, deltas), args.out)
    else:
        _emit(reporting.to_json(reporting.solve_report_to_dict(report, deltas)), args.out)
    if report.status == SOLVED:
        return 0
    if report.status == EVALUATION_FAILED:
        print(f"error: {report.error}", file=sys.stderr)
        return 1
    print(f"solver did not converge: {report.status}", file=sys.stderr)
    return 2


def _cmd_sweep(entry: BenchmarkEntry, args) -> int:
    grid = tuple(args.lambda_grid) if args.lambda_grid else DEFAULT_LAMBDA_GRID
    config = SweepConfig(lambda_grid=grid, base=_solver_config(args, grid[0]), parallel=args.parallel)
    report = sweep(entry.problem, config, start=_start_iterate(entry, args), status_known=entry.status)
    if args.format == "csv":
        _emit(reporting.sweep_report_to_csv(report), args.out)
    else:
        _emit(reporting.to_json(reporting.sweep_report_to_dict(report)), args.out)
    if report.converged:
        return 0
    print("no penalty in the grid reached convergence", file=sys.stderr)
    return 2


def _cmd_check_derivatives(entry: BenchmarkEntry, args) -> int:
    d = entry.problem.dims
    rng = np.random.default_rng(20240801)
    points = [(rng.uniform(-2, 2, d.n), rng.uniform(-2, 2, d.m)) for _ in range(10)]
    report = check_derivatives(entry.problem, points)
    tree = {
        "problem": entry.problem.name,
        "passed": report.passed,
        "tolerance": report.tolerance,
        "worst_error": report.worst,
        "gradient_errors": report.grad_errors,
        "hessian_errors": report.hess_errors,
        "num_points": len(report.points),
    }
    _emit(reporting.to_json(tree), args.out)
    return 0 if report.passed else 1


def _cmd_diagnose(entry: BenchmarkEntry, args) -> int:
    lam = args.lam
    zeta = None
    source = None
    for cp in entry.certified_points:
        if cp.admissible(lam):
            zeta = cp.build(lam)
            source = f"certified point ({cp.condition})"
            break
    if zeta is None:
        solve_report = run(entry.problem, _solver_config(args, lam), _start_iterate(entry, args))
        zeta = solve_report.final
        source = f"computed point (status {solve_report.status})"
    report = diagnose(entry.problem, zeta, lam)
    tree = {
        "problem": entry.problem.name,
        "lambda": lam,
        "point_source": source,
        "point": {
            "x": zeta.x.tolist(), "y": zeta.y.tolist(), "z": zeta.z.tolist(),
            "u": zeta.u.tolist(), "v": zeta.v.tolist(), "w": zeta.w.tolist(),
        },
        "regularity": reporting.regularity_report_to_dict(report),
    }
    _emit(reporting.to_json(tree), args.out)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1

    mode = args.mode_pos or args.mode
    if mode is None:
        print("error: no mode given; expected one of " + ", ".join(MODES), file=sys.stderr)
        return 1
    if args.mode_pos and args.mode and args.mode_pos != args.mode:
        print("error: positional mode conflicts with --mode", file=sys.stderr)
        return 1

    try:
        entry = get_entry(args.problem)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return 1

    try:
        if mode == "solve":
            return _cmd_solve(entry, args)
        if mode == "sweep":
            return _cmd_sweep(entry, args)
        if mode == "check-derivatives":
            return _cmd_check_derivatives(entry, args)
        return _cmd_diagnose(entry, args)
    except (EvaluationError, InconsistentPoint, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def console_main() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    console_main()
