"""scikit-learn style front end.

The estimators are fitted on an :class:`~anisoexp.problem.AnisotropicProblem`
and predict values of the fitted fields at query points, so they can be
cloned, have their parameters searched with ``set_params``, and be dropped
into code that expects the estimator protocol.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .analysis import DEFAULT_EPS, expansion_residual, run_sweep
from .assembly import NodalField, SCHEMES, assemble_perturbed
from .cascade import MAX_ORDER, solve_cascade
from .linalg import DEFAULT_TOL, solve_spd
from .problem import check_eps, check_problem

__all__ = ["PerturbedSolver", "AsymptoticExpansion", "RateSweep"]


def _check_points(X, grid) -> np.ndarray:
    X = check_array(X, ensure_2d=True, dtype=np.float64)
    if X.shape[1] != grid.ndim:
        raise ValueError(f"X has {X.shape[1]} columns, the problem has N={grid.ndim}")
    lo, hi = np.asarray(grid.domain.lower), np.asarray(grid.domain.upper)
    if np.any(X < lo) or np.any(X > hi):
        raise ValueError("query points must lie in the closed domain")
    return X


class PerturbedSolver(BaseEstimator):
    """Q1 solution of the eps-scaled problem.

    Parameters
    ----------
    eps : float in (0, 1]
    tol : float
        Relative residual target of the preconditioned CG solve.
    max_iter : int
    """

    def __init__(self, eps=0.5, tol=DEFAULT_TOL, max_iter=20000):
        self.eps = eps
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, problem, y=None):
        problem = check_problem(problem)
        eps = check_eps(self.eps)
        system = assemble_perturbed(problem.field, eps, problem.grid, problem.f)
        self.solution_, self.stats_ = solve_spd(system, tol=self.tol, max_iter=self.max_iter)
        self.grid_ = problem.grid
        return self

    def predict(self, X):
        check_is_fitted(self, "solution_")
        return self.solution_.at(_check_points(X, self.grid_))


class AsymptoticExpansion(BaseEstimator):
    """Terms ``u_0 .. u_order`` of the eps-expansion; predicts the truncated sum.

    Parameters
    ----------
    order : int, 0..6
    branch : {"auto", "diagonal", "general"}
    scheme : {"strong", "galerkin"}
        How X1 derivatives enter the cascade sources. "strong" forms them by
        differences across slices; "galerkin" uses the full Q1 block matrices,
        which makes the cascade the exact eps-expansion of the discrete system.
    """

    def __init__(self, order=2, branch="auto", scheme="strong"):
        self.order = order
        self.branch = branch
        self.scheme = scheme

    def fit(self, problem, y=None):
        problem = check_problem(problem)
        if not isinstance(self.order, (int, np.integer)) or not 0 <= self.order <= MAX_ORDER:
            raise ValueError(f"order must be an integer in 0..{MAX_ORDER}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        self.cascade_ = solve_cascade(
            problem.field, problem.f, problem.grid, int(self.order), branch=self.branch, scheme=self.scheme
        )
        self.terms_ = self.cascade_.terms
        self.branch_ = self.cascade_.branch
        self.grid_ = problem.grid
        return self

    def expand(self, eps) -> NodalField:
        check_is_fitted(self, "cascade_")
        return self.cascade_.partial_sum(check_eps(eps))

    def predict(self, X, eps=0.5):
        return self.expand(eps).at(_check_points(X, self.grid_))

    def residual(self, u_eps: NodalField, eps) -> NodalField:
        check_is_fitted(self, "cascade_")
        return expansion_residual(u_eps, self.cascade_, check_eps(eps))


class RateSweep(BaseEstimator):
    """Fitted log-log decay rates of the expansion residual over an eps sweep."""

    def __init__(
        self,
        order=0,
        eps_values=DEFAULT_EPS,
        branch="auto",
        scheme="strong",
        tol=DEFAULT_TOL,
        max_iter=20000,
        slope_tol=0.25,
        slope_tol_x1=None,
    ):
        self.order = order
        self.eps_values = eps_values
        self.branch = branch
        self.scheme = scheme
        self.tol = tol
        self.max_iter = max_iter
        self.slope_tol = slope_tol
        self.slope_tol_x1 = slope_tol_x1

    def fit(self, problem, y=None):
        self.report_ = run_sweep(
            check_problem(problem),
            order=self.order,
            eps_values=self.eps_values,
            branch=self.branch,
            scheme=self.scheme,
            tol=self.tol,
            max_iter=self.max_iter,
            slope_tol=self.slope_tol,
            slope_tol_x1=self.slope_tol_x1,
        )
        return self

    def score(self, problem=None, y=None):
        """Smallest margin of the fitted slopes over their floors (>= 0 means pass)."""
        check_is_fitted(self, "report_")
        r = self.report_
        return min(r.slope_x2 - (r.theory_x2 - r.tol_x2), r.slope_x1 - (r.theory_x1 - r.tol_x1))
