"""Command line front end: ``anisoexp {solve,cascade,sweep,oracle-check} --config F --out D``.

Exit status: 0 success, 2 configuration error, 3 solver or analysis failure,
4 a rate or convergence verdict did not pass.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .analysis import run_sweep, seminorm
from .assembly import NodalField, assemble_perturbed
from .cascade import solve_cascade
from .config import ConfigError, ExperimentConfig, load_config
from .grid import build_grid
from .linalg import NonConvergenceError, solve_spd
from .oracle import modes_from_expr, oracle_cascade, oracle_perturbed
from .reports import write_csv, write_nodal, write_sweep_report

__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_CONFIG", "EXIT_SOLVER", "EXIT_VERDICT", "ORACLE_MIN_SLOPE"]

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VERDICT = 0, 2, 3, 4
ORACLE_MIN_SLOPE = 1.8

logger = logging.getLogger("anisoexp")


class VerdictFailure(Exception):
    pass


def _tag(eps: float) -> str:
    return format(eps, ".17g").replace(".", "p")


def cmd_solve(config: ExperimentConfig, out: Path) -> int:
    problem = config.problem()
    comments = config.resolved_lines()
    rows = []
    for eps in config.eps:
        system = assemble_perturbed(problem.field, eps, problem.grid, problem.f)
        u, st = solve_spd(system, tol=config.tol, max_iter=config.max_iter)
        write_nodal(out / f"u_eps_{_tag(eps)}.csv", u, comments)
        rows.append([eps, st.iterations, st.residual, seminorm(u, "X2"), seminorm(u, "X1")])
        print(f"eps={eps:<10g} CG its {st.iterations:5d}  rel. residual {st.residual:.2e}")
    write_csv(out / "solve.csv", ["eps", "iterations", "residual", "seminormX2", "seminormX1"], rows, comments)
    return EXIT_OK


def cmd_cascade(config: ExperimentConfig, out: Path) -> int:
    problem = config.problem()
    comments = config.resolved_lines()
    result = solve_cascade(
        problem.field, problem.f, problem.grid, config.order, branch=config.branch, scheme=config.scheme
    )
    rows = []
    for k, term in enumerate(result.terms):
        write_nodal(out / f"u_{k}.csv", term, comments)
        rows.append([k, term.max_abs(), seminorm(term, "X2"), seminorm(term, "X1")])
        print(f"u_{k}: max|u| {term.max_abs():.6e}")
    write_csv(out / "cascade.csv", ["k", "maxabs", "seminormX2", "seminormX1"], rows, comments)
    print(f"branch {result.branch}, scheme {result.scheme}")
    return EXIT_OK


def cmd_sweep(config: ExperimentConfig, out: Path) -> int:
    report = run_sweep(config.problem(), **config.sweep_kwargs())
    write_sweep_report(out / "sweep.csv", report, config.resolved_lines())
    print(report.summary())
    if not report.passed:
        raise VerdictFailure(f"sweep verdict {report.verdict}")
    return EXIT_OK


def _relative_l2(u: NodalField, exact: np.ndarray) -> float:
    ref = np.linalg.norm(exact)
    return float(np.linalg.norm(u.values - exact) / ref) if ref > 0 else float(np.linalg.norm(u.values))


def cmd_oracle_check(config: ExperimentConfig, out: Path) -> int:
    """FEM against the sine-series solution over the refinement levels."""
    problem = config.problem()
    diag = problem.field.constant_diagonal()
    if diag is None:
        raise ConfigError("[coefficients] oracle-check needs a constant diagonal coefficient matrix")
    finest = tuple(n * config.refine[-1] for n in config.subdivisions)
    modes = modes_from_expr(problem.f, config.domain, finest)
    if modes.coefficients.size == 0:
        raise ConfigError("[source] f has no sine content, nothing to compare")

    quantities = [f"u_eps({eps:g})" for eps in config.eps]
    even = [k for k in range(config.order + 1) if k % 2 == 0]
    quantities += [f"u_{k}" for k in even]
    errors = np.zeros((len(quantities), len(config.refine)))
    spacing = []
    for c, r in enumerate(config.refine):
        grid = build_grid(config.domain, [n * r for n in config.subdivisions])
        spacing.append(float(np.max(grid.spacing)))
        pts = grid.node_coordinates(interior=True).reshape(-1, grid.ndim)
        row = 0
        for eps in config.eps:
            u, _ = solve_spd(assemble_perturbed(problem.field, eps, grid, problem.f), tol=config.tol, max_iter=config.max_iter)
            errors[row, c] = _relative_l2(u, oracle_perturbed(modes, diag, eps)(pts))
            row += 1
        cascade = solve_cascade(problem.field, problem.f, grid, config.order, branch="diagonal", scheme=config.scheme)
        exact = oracle_cascade(modes, diag, config.order)
        for k in even:
            errors[row, c] = _relative_l2(cascade.terms[k], exact[k](pts))
            row += 1

    log_h = np.log(spacing)
    slopes = [float(np.polyfit(log_h, np.log(e), 1)[0]) if np.all(e > 0) else float("inf") for e in errors]
    ns = [str(n * r) for r in config.refine for n in config.subdivisions[:1]]
    print(f"{'quantity':>14} " + " ".join(f"{'n=' + n:>12}" for n in ns) + f" {'h-slope':>8}")
    for name, e, s in zip(quantities, errors, slopes):
        print(f"{name:>14} " + " ".join(f"{v:12.4e}" for v in e) + f" {s:8.3f}")
    passed = all(s >= ORACLE_MIN_SLOPE for s in slopes)
    print(f"verdict {'PASS' if passed else 'FAIL'} (h-slope floor {ORACLE_MIN_SLOPE})")

    header = ["quantity"] + [f"err_n{n}" for n in ns] + ["slope"]
    rows = [[name, *e, s] for name, e, s in zip(quantities, errors, slopes)]
    rows.append(["verdict", *([""] * len(ns)), "PASS" if passed else "FAIL"])
    write_csv(out / "oracle_check.csv", header, rows, config.resolved_lines())
    if not passed:
        raise VerdictFailure("oracle h-convergence below the floor")
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "cascade": cmd_cascade,
    "sweep": cmd_sweep,
    "oracle-check": cmd_oracle_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anisoexp", description="Expansion terms, eps sweeps and oracle checks for anisotropic elliptic problems."
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-solve progress")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "solve": "solve the eps-scaled problem for every configured eps",
        "cascade": "compute the expansion terms u_0..u_d",
        "sweep": "fit residual decay rates over the eps list",
        "oracle-check": "compare FEM results with the exact sine-series solution",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, type=Path, help="experiment configuration file")
        p.add_argument("--out", type=Path, default=None, help="output directory (default: [output] dir)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = load_config(args.config)
        out = args.out if args.out is not None else Path(config.out_dir)
        return COMMANDS[args.command](config, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except VerdictFailure as exc:
        print(f"verdict failure: {exc}", file=sys.stderr)
        return EXIT_VERDICT
    except (NonConvergenceError, ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
