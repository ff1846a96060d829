"""Block-gradient seminorms, expansion residuals and eps-sweep rate fits."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .assembly import NodalField, assemble_perturbed, full_mesh
from .cascade import CascadeResult, resolve_branch, solve_cascade, solve_limit
from .linalg import DEFAULT_TOL, NonConvergenceError, SolveStats, solve_spd
from .problem import AnisotropicProblem, check_eps_values, check_problem

__all__ = [
    "RateReport",
    "seminorm",
    "expansion_residual",
    "fit_rate",
    "theoretical_slopes",
    "run_sweep",
    "DEFAULT_EPS",
    "H_FLOOR_RATIO",
]

logger = logging.getLogger(__name__)

DEFAULT_EPS = tuple(2.0**-k for k in range(1, 7))
H_FLOOR_RATIO = 0.1


def seminorm(v: NodalField, block: str) -> float:
    """``||grad_X1 v||`` or ``||grad_X2 v||`` of the Q1 interpolant, by 2-point Gauss per cell."""
    if block not in ("X1", "X2"):
        raise ValueError("block must be 'X1' or 'X2'")
    grid = v.grid
    mesh = full_mesh(grid)
    axes = range(grid.split) if block == "X1" else range(grid.split, grid.ndim)
    nodal = v.full().reshape(-1)
    total = 0.0
    for a in axes:
        g = mesh.gradient_at_qp(nodal, a)
        total += float(np.einsum("q,eq->", mesh.weights, g * g))
    return float(np.sqrt(total))


def expansion_residual(u_eps: NodalField, cascade: CascadeResult, eps: float) -> NodalField:
    """``u_eps - sum_{k <= d} eps^k u_k``."""
    if u_eps.grid != cascade.grid:
        raise ValueError("solution and cascade live on different grids")
    return u_eps - cascade.partial_sum(eps)


def fit_rate(points: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of ``log(value)`` against ``log(eps)``."""
    pts = list(points)
    if len(pts) < 3:
        raise ValueError(f"need at least 3 points to fit a rate, got {len(pts)}")
    eps = np.array([p[0] for p in pts], dtype=float)
    val = np.array([p[1] for p in pts], dtype=float)
    if np.any(~(val > 0)):
        raise ValueError(
            "non-positive residual value: residual reached machine zero; "
            "use a coarser eps range, a tighter solver tolerance or a smaller order"
        )
    slope, _ = np.polyfit(np.log(eps), np.log(val), 1)
    return float(slope)


def theoretical_slopes(order: int, branch: str) -> tuple[int, int]:
    """Guaranteed (X2, X1) exponents of the residual seminorms."""
    if order == 0:
        return 1, 0
    if branch == "diagonal" and order % 2 == 0:
        return order + 1, order
    return order, order - 1


@dataclass
class RateReport:
    eps_values: tuple[float, ...]
    seminorm_x2: np.ndarray
    seminorm_x1: np.ndarray
    slope_x2: float
    slope_x1: float
    theory_x2: int
    theory_x1: int
    tol_x2: float
    tol_x1: float
    order: int
    branch: str
    scheme: str
    floor_x2: float = 0.0
    floor_x1: float = 0.0
    incomplete: tuple[float, ...] = ()
    stats: list[SolveStats] = field(default_factory=list, repr=False)

    @property
    def pass_x2(self) -> bool:
        return self.slope_x2 >= self.theory_x2 - self.tol_x2

    @property
    def pass_x1(self) -> bool:
        return self.slope_x1 >= self.theory_x1 - self.tol_x1

    @property
    def h_floor(self) -> bool:
        """Discretisation floor exceeds 10% of the smallest measured residual."""
        ok = np.isfinite(self.seminorm_x2)
        if not ok.any():
            return False
        return bool(
            self.floor_x2 > H_FLOOR_RATIO * np.min(self.seminorm_x2[ok])
            or self.floor_x1 > H_FLOOR_RATIO * np.min(self.seminorm_x1[ok])
        )

    @property
    def passed(self) -> bool:
        return self.pass_x2 and self.pass_x1

    @property
    def verdict(self) -> str:
        if self.passed:
            return "PASS"
        return "H-FLOOR REACHED" if self.h_floor else "FAIL"

    def summary(self) -> str:
        lines = [f"{'eps':>12} {'|grad_X2 r|':>14} {'|grad_X1 r|':>14}"]
        for e, a, b in zip(self.eps_values, self.seminorm_x2, self.seminorm_x1):
            lines.append(f"{e:12.6g} {a:14.6e} {b:14.6e}")
        lines.append(f"slope X2 {self.slope_x2:.3f} (theory {self.theory_x2}, floor {self.theory_x2 - self.tol_x2:g})")
        lines.append(f"slope X1 {self.slope_x1:.3f} (theory {self.theory_x1}, floor {self.theory_x1 - self.tol_x1:g})")
        lines.append(f"h-floor estimate X2 {self.floor_x2:.3e}, X1 {self.floor_x1:.3e}")
        lines.append(f"verdict {self.verdict}")
        return "\n".join(lines)


def run_sweep(
    problem: AnisotropicProblem,
    order: int = 0,
    eps_values: Sequence[float] = DEFAULT_EPS,
    branch: str = "auto",
    scheme: str = "strong",
    tol: float = DEFAULT_TOL,
    max_iter: int = 20000,
    slope_tol: float = 0.25,
    slope_tol_x1: float | None = None,
    cascade: CascadeResult | None = None,
) -> RateReport:
    """Solve the perturbed problem for each eps and fit the residual decay rates.

    The cascade is eps-independent and computed once. The h-floor estimate is
    the residual's eps -> 0 limit: the discrete limit solution (Galerkin in
    X1) minus the cascade's ``u_0``.
    """
    check_problem(problem)
    eps_values = check_eps_values(eps_values, min_points=3)
    field_, f, grid = problem.field, problem.f, problem.grid
    branch = resolve_branch(field_, branch)
    if cascade is None:
        cascade = solve_cascade(field_, f, grid, order, branch=branch, scheme=scheme)

    x2 = np.full(len(eps_values), np.nan)
    x1 = np.full(len(eps_values), np.nan)
    stats, incomplete = [], []
    for n, eps in enumerate(eps_values):
        system = assemble_perturbed(field_, eps, grid, f)
        try:
            u_eps, st = solve_spd(system, tol=tol, max_iter=max_iter)
        except NonConvergenceError as exc:
            logger.warning("eps=%g: %s", eps, exc)
            incomplete.append(eps)
            continue
        r = expansion_residual(u_eps, cascade, eps)
        x2[n], x1[n] = seminorm(r, "X2"), seminorm(r, "X1")
        stats.append(st)
        logger.info("eps=%g  X2=%.3e  X1=%.3e  (%d CG its)", eps, x2[n], x1[n], st.iterations)

    ok = np.isfinite(x2)
    if ok.sum() < 3:
        raise RuntimeError(f"only {ok.sum()} eps points solved; need 3 to fit a rate")
    if np.all(x2[ok] == 0) and np.all(x1[ok] == 0):
        raise ValueError("zero residuals, nothing to fit")
    eps_ok = np.asarray(eps_values)[ok]
    slope_x2 = fit_rate(zip(eps_ok, x2[ok]))
    slope_x1 = fit_rate(zip(eps_ok, x1[ok]))

    limit = solve_limit(field_, f, grid, scheme="galerkin")
    gap = limit - cascade.terms[0]
    theory = theoretical_slopes(order, branch)
    return RateReport(
        eps_values=eps_values,
        seminorm_x2=x2,
        seminorm_x1=x1,
        slope_x2=slope_x2,
        slope_x1=slope_x1,
        theory_x2=theory[0],
        theory_x1=theory[1],
        tol_x2=slope_tol,
        tol_x1=slope_tol if slope_tol_x1 is None else slope_tol_x1,
        order=order,
        branch=branch,
        scheme=scheme,
        floor_x2=seminorm(gap, "X2"),
        floor_x1=seminorm(gap, "X1"),
        incomplete=tuple(incomplete),
        stats=stats,
    )
