"""Problem bundle shared by the functional API and the estimators."""

from __future__ import annotations

from dataclasses import dataclass

from .coefficients import BlockCoefficientField
from .expr import ScalarExpr, parse
from .grid import BoxDomain, TensorGrid, build_grid

__all__ = ["AnisotropicProblem", "check_problem", "check_eps", "check_eps_values"]


@dataclass(frozen=True)
class AnisotropicProblem:
    """Coefficients, source and grid of ``-div(A_eps grad u) = f`` with zero boundary values."""

    field: BlockCoefficientField
    f: ScalarExpr
    grid: TensorGrid

    @classmethod
    def from_strings(cls, rows, f: str, domain: BoxDomain, subdivisions, ellipticity_lambda: float = 1e-3):
        field = BlockCoefficientField.from_strings(rows, domain.split, ellipticity_lambda)
        return cls(field, parse(f, domain.ndim), build_grid(domain, subdivisions))


def check_problem(problem) -> AnisotropicProblem:
    if not isinstance(problem, AnisotropicProblem):
        raise TypeError(f"expected an AnisotropicProblem, got {type(problem).__name__}")
    g, a = problem.grid, problem.field
    if a.ndim != g.ndim or a.split != g.split or problem.f.nvars != g.ndim:
        raise ValueError("coefficients, source and grid disagree on dimension or split")
    return problem


def check_eps(eps) -> float:
    eps = float(eps)
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps out of (0,1]: {eps}")
    return eps


def check_eps_values(eps_values, min_points: int = 1) -> tuple[float, ...]:
    values = tuple(check_eps(e) for e in eps_values)
    if len(values) < min_points:
        raise ValueError(f"need at least {min_points} eps values, got {len(values)}")
    if any(b >= a for a, b in zip(values, values[1:])):
        raise ValueError("eps values must be strictly decreasing")
    return values
