"""Solvers: Jacobi-preconditioned CG for the full system, banded Cholesky for slices."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .assembly import NodalField, SliceSystem, SparseSymSystem, to_upper_banded

__all__ = [
    "SolveStats",
    "NonConvergenceError",
    "NotSymmetricError",
    "EllipticityLossError",
    "pcg",
    "solve_spd",
    "BandedCholesky",
    "solve_banded",
]

DEFAULT_TOL = 1e-10


class NonConvergenceError(RuntimeError):
    """CG hit ``max_iter``; carries the best iterate and its relative residual."""

    def __init__(self, message, best, residual, iterations):
        super().__init__(message)
        self.best = best
        self.residual = residual
        self.iterations = iterations


class NotSymmetricError(ValueError):
    pass


class EllipticityLossError(ArithmeticError):
    pass


@dataclass
class SolveStats:
    iterations: int
    residual: float
    wall_time: float
    history: list[float] = field(default_factory=list, repr=False)


def pcg(matrix, b, tol=DEFAULT_TOL, max_iter=10000, x0=None, record=False):
    """Conjugate gradients with Jacobi preconditioning on a symmetric matrix.

    Returns ``(x, stats)``. With ``record=True`` the stats carry, per iteration,
    the A-norm of the update ``alpha * p`` (its squares sum to the A-norm error
    reduction, so the error decreases monotonically).
    """
    start = time.perf_counter()
    b = np.asarray(b, dtype=float)
    diag = matrix.diagonal()
    if np.any(diag <= 0):
        raise EllipticityLossError("non-positive diagonal entry in SPD system")
    inv_diag = 1.0 / diag
    bnorm = np.linalg.norm(b)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    if bnorm == 0.0:
        return np.zeros_like(b), SolveStats(0, 0.0, time.perf_counter() - start)

    r = b - matrix @ x
    rel = np.linalg.norm(r) / bnorm
    best, best_rel = x.copy(), rel
    history = []
    if rel <= tol:
        return x, SolveStats(0, rel, time.perf_counter() - start, history)
    z = inv_diag * r
    p = z.copy()
    rz = r @ z
    for it in range(1, max_iter + 1):
        ap = matrix @ p
        pap = p @ ap
        if pap <= 0:
            raise EllipticityLossError("matrix is not positive definite (p.Ap <= 0)")
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        if record:
            history.append(alpha * alpha * pap)
        rel = np.linalg.norm(r) / bnorm
        if rel < best_rel:
            best, best_rel = x.copy(), rel
        if rel <= tol:
            # guard against drift of the recursive residual
            rel_true = np.linalg.norm(b - matrix @ x) / bnorm
            if rel_true <= tol:
                return x, SolveStats(it, rel_true, time.perf_counter() - start, history)
            r = b - matrix @ x
        z = inv_diag * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise NonConvergenceError(
        f"CG did not reach tol={tol:g} in {max_iter} iterations (best residual {best_rel:.3e})",
        best,
        best_rel,
        max_iter,
    )


def solve_spd(system: SparseSymSystem, tol: float = DEFAULT_TOL, max_iter: int = 10000, record=False):
    """Solve an assembled symmetric system; returns ``(NodalField, SolveStats)``."""
    if not system.symmetric:
        raise NotSymmetricError("solve_spd needs a symmetric system (A must be symmetric)")
    if not 0.0 < tol < 1.0:
        raise ValueError("tol must lie in (0, 1)")
    x, stats = pcg(system.matrix, system.rhs, tol=tol, max_iter=max_iter, record=record)
    return NodalField(x, system.grid), stats


class BandedCholesky:
    """Factor-once banded Cholesky; ``solve`` accepts one or many right-hand sides.

    Right-hand sides are columns of ``rhs`` (shape ``(n,)`` or ``(n, k)``).
    """

    def __init__(self, banded: np.ndarray):
        self.bandwidth = banded.shape[0] - 1
        self.size = banded.shape[1]
        if self.bandwidth > max(self.size - 1, 0):
            raise ValueError("bandwidth exceeds matrix dimension")
        try:
            self.factor = sla.cholesky_banded(banded, lower=False, check_finite=True)
        except sla.LinAlgError as exc:
            raise EllipticityLossError(f"non-positive pivot in banded Cholesky: {exc}") from exc

    @classmethod
    def from_matrix(cls, matrix) -> "BandedCholesky":
        ab, _ = to_upper_banded(sp.csr_matrix(matrix))
        return cls(ab)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape[0] != self.size:
            raise ValueError(f"rhs has {rhs.shape[0]} rows, system has {self.size}")
        return sla.cho_solve_banded((self.factor, False), rhs, check_finite=False)


_FACTORS: dict[int, tuple[SliceSystem, BandedCholesky]] = {}


def slice_factor(slice_system: SliceSystem) -> BandedCholesky:
    """Cached factorization of a slice system (keyed on object identity)."""
    hit = _FACTORS.get(id(slice_system))
    if hit is not None and hit[0] is slice_system:
        return hit[1]
    fac = BandedCholesky(slice_system.banded)
    if len(_FACTORS) > 32:
        _FACTORS.clear()
    _FACTORS[id(slice_system)] = (slice_system, fac)
    return fac


def solve_banded(slice_system: SliceSystem, rhs: np.ndarray) -> np.ndarray:
    """Solve a slice system for one rhs ``(n,)`` or a batch of rows ``(k, n)``."""
    fac = slice_factor(slice_system)
    rhs = np.asarray(rhs, dtype=float)
    if rhs.ndim == 1:
        return fac.solve(rhs)
    return fac.solve(rhs.T).T
