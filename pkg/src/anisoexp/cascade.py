"""Expansion terms u_0 .. u_d from the slice-wise hierarchy of limit problems."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .assembly import (
    NodalField,
    SliceSystem,
    assemble_load,
    assemble_slice,
    cascade_rhs,
    slice_loads,
    x1_mass,
)
from .coefficients import BlockCoefficientField
from .expr import ScalarExpr
from .grid import TensorGrid
from .linalg import BandedCholesky, SolveStats, solve_banded

__all__ = ["CascadeResult", "MAX_ORDER", "resolve_branch", "solve_limit", "solve_cascade"]

MAX_ORDER = 6
BRANCHES = ("auto", "diagonal", "general")


@dataclass
class CascadeResult:
    order: int
    terms: list[NodalField]
    branch: str
    scheme: str = "strong"
    stats: list[SolveStats] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if len(self.terms) != self.order + 1:
            raise ValueError("a cascade of order d carries d + 1 terms")

    @property
    def grid(self) -> TensorGrid:
        return self.terms[0].grid

    def partial_sum(self, eps: float, order: int | None = None) -> NodalField:
        """``sum_{k <= order} eps**k u_k``."""
        order = self.order if order is None else order
        total = np.zeros_like(self.terms[0].values)
        for k in range(order + 1):
            total = total + eps**k * self.terms[k].values
        return NodalField(total, self.grid)


def resolve_branch(field: BlockCoefficientField, branch: str = "auto") -> str:
    if branch not in BRANCHES:
        raise ValueError(f"branch must be one of {BRANCHES}, got {branch!r}")
    if branch == "auto":
        return "diagonal" if field.diagonal_blocks else "general"
    if branch == "diagonal" and not field.diagonal_blocks:
        raise ValueError("diagonal branch requested but A12/A21 are not identically zero")
    return branch


class _SliceSolver:
    """Slice stiffness factorization plus, for the Galerkin scheme, the X1 mass."""

    def __init__(self, field: BlockCoefficientField, grid: TensorGrid, scheme: str):
        self.grid = grid
        self.scheme = scheme
        self.slice_system: SliceSystem = assemble_slice(field, grid)
        self.mass = BandedCholesky.from_matrix(x1_mass(grid)) if scheme == "galerkin" else None

    def solve(self, loads: np.ndarray) -> tuple[NodalField, SolveStats]:
        """Solve every slice; ``loads`` is ``(n_slices, slice_size)``."""
        start = time.perf_counter()
        if self.mass is not None:
            loads = self.mass.solve(loads)
        x = solve_banded(self.slice_system, loads)
        resid = self.slice_system.matrix @ x.T - loads.T
        scale = np.max(np.abs(loads))
        rel = float(np.max(np.abs(resid)) / scale) if scale > 0 else 0.0
        stats = SolveStats(self.grid.n_slices, rel, time.perf_counter() - start)
        return NodalField(x.reshape(-1), self.grid), stats


def _initial_loads(f: ScalarExpr, grid: TensorGrid, scheme: str) -> np.ndarray:
    if scheme == "galerkin":
        return assemble_load(f, grid).reshape(grid.n_slices, grid.slice_size)
    return slice_loads(f, grid)


def solve_limit(field: BlockCoefficientField, f: ScalarExpr, grid: TensorGrid, scheme: str = "strong") -> NodalField:
    """Solution of the degenerate X2-only problem, slice by slice."""
    solver = _SliceSolver(field, grid, scheme)
    u0, _ = solver.solve(_initial_loads(f, grid, scheme))
    return u0


def solve_cascade(
    field: BlockCoefficientField,
    f: ScalarExpr,
    grid: TensorGrid,
    order: int,
    branch: str = "auto",
    scheme: str = "strong",
) -> CascadeResult:
    """Terms ``u_0 .. u_order`` of the expansion.

    The diagonal branch zero-fills odd orders and drops the A12/A21 sources.
    One slice factorization serves every slice and every order.
    """
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"order must be in 0..{MAX_ORDER}, got {order}")
    branch = resolve_branch(field, branch)
    solver = _SliceSolver(field, grid, scheme)
    u0, st = solver.solve(_initial_loads(f, grid, scheme))
    terms, stats = [u0], [st]
    for k in range(1, order + 1):
        if branch == "diagonal" and k % 2 == 1:
            terms.append(NodalField.zeros(grid))
            stats.append(SolveStats(0, 0.0, 0.0))
            continue
        loads = cascade_rhs(
            k,
            terms[k - 1],
            terms[k - 2] if k >= 2 else None,
            field,
            grid,
            scheme=scheme,
            coupling=branch == "general",
        )
        uk, st = solver.solve(loads)
        terms.append(uk)
        stats.append(st)
    return CascadeResult(order, terms, branch, scheme, stats)
