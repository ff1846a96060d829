"""Block coefficient matrix ``A = [[A11, A12], [A21, A22]]`` and its checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .expr import ScalarExpr, evaluate, is_zero, parse, variables
from .grid import TensorGrid

__all__ = [
    "BlockCoefficientField",
    "HypothesisCheck",
    "ValidationReport",
    "scaled_block_weight",
    "block_of",
    "validate",
]

N_DIRECTIONS = 32


def block_of(i: int, q: int) -> int:
    """1 if (1-based) coordinate ``i`` belongs to X1, else 2."""
    return 1 if i <= q else 2


def scaled_block_weight(i: int, j: int, q: int, eps: float) -> float:
    """Factor multiplying ``a_ij`` in the scaled matrix (1-based indices).

    ``eps**2`` inside A11, ``eps`` on the coupling blocks, 1 inside A22.
    """
    return float(eps) ** (2 - (i > q) - (j > q))


@dataclass(frozen=True)
class BlockCoefficientField:
    """Coefficient entries ``a_ij`` as expressions, with the X1/X2 split ``q``.

    ``entries[i][j]`` holds the 0-based entry (i, j).
    """

    entries: tuple[tuple[ScalarExpr, ...], ...]
    split: int
    ellipticity_lambda: float = 1e-3

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.entries)
        object.__setattr__(self, "entries", rows)
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise ValueError("coefficient matrix must be square")
        if not 1 <= self.split < n:
            raise ValueError(f"split must satisfy 1 <= q < N, got q={self.split}, N={n}")
        if any(e.nvars != n for r in rows for e in r):
            raise ValueError(f"every entry must be parsed with nvars={n}")
        if not self.ellipticity_lambda > 0:
            raise ValueError("ellipticity_lambda must be positive")

    @classmethod
    def from_strings(cls, rows: Sequence[Sequence[str]], split: int, ellipticity_lambda: float = 1e-3):
        n = len(rows)
        return cls(tuple(tuple(parse(s, n) for s in r) for r in rows), split, ellipticity_lambda)

    @classmethod
    def identity(cls, ndim: int = 2, split: int = 1, ellipticity_lambda: float = 1e-3):
        rows = [["1" if i == j else "0" for j in range(ndim)] for i in range(ndim)]
        return cls.from_strings(rows, split, ellipticity_lambda)

    @property
    def ndim(self) -> int:
        return len(self.entries)

    def entry(self, i: int, j: int) -> ScalarExpr:
        """Entry by 0-based indices."""
        return self.entries[i][j]

    def block_pairs(self, rows: int, cols: int):
        """0-based (i, j) pairs of block (rows, cols), each in {1, 2}."""
        q = self.split
        ri = range(q) if rows == 1 else range(q, self.ndim)
        cj = range(q) if cols == 1 else range(q, self.ndim)
        return [(i, j) for i in ri for j in cj]

    @property
    def diagonal_blocks(self) -> bool:
        return all(is_zero(self.entries[i][j]) for b in ((1, 2), (2, 1)) for i, j in self.block_pairs(*b))

    @property
    def a22_x2_only(self) -> bool:
        return all(
            v > self.split for i, j in self.block_pairs(2, 2) for v in variables(self.entries[i][j].ast)
        )

    @property
    def symmetric(self) -> bool:
        n = self.ndim
        return all(self.entries[i][j].ast == self.entries[j][i].ast for i in range(n) for j in range(i + 1, n))

    def constant_diagonal(self) -> np.ndarray | None:
        """Diagonal values when A is a constant diagonal matrix, else None."""
        n = self.ndim
        for i in range(n):
            for j in range(n):
                e = self.entries[i][j]
                if i != j and not is_zero(e):
                    return None
                if variables(e.ast):
                    return None
        origin = np.zeros(n)
        return np.array([evaluate(self.entries[i][i], origin) for i in range(n)])

    def evaluate(self, points) -> np.ndarray:
        """Matrix values at ``points`` (last axis N); shape ``(..., N, N)``."""
        pts = np.asarray(points, dtype=float)
        out = np.empty(pts.shape[:-1] + (self.ndim, self.ndim))
        for i in range(self.ndim):
            for j in range(self.ndim):
                out[..., i, j] = evaluate(self.entries[i][j], pts)
        return out


@dataclass(frozen=True)
class HypothesisCheck:
    name: str
    passed: bool
    witness: Any = None
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[HypothesisCheck, ...] = field(default_factory=tuple)

    def __getitem__(self, name: str) -> HypothesisCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def diagonal_blocks(self) -> bool:
        return self["diagonal_blocks"].passed

    @property
    def a22_x2_only(self) -> bool:
        return self["a22_x2_only"].passed

    @property
    def ok(self) -> bool:
        """Required hypotheses hold (the diagonal-block flag is informational)."""
        return all(c.passed for c in self.checks if c.name != "diagonal_blocks")

    def failures(self) -> list[HypothesisCheck]:
        return [c for c in self.checks if not c.passed and c.name != "diagonal_blocks"]

    def __str__(self):
        lines = []
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            extra = f" witness={c.witness}" if c.witness is not None else ""
            lines.append(f"{c.name}: {status}{extra}{' ' + c.detail if c.detail else ''}")
        return "\n".join(lines)


def _unit_directions(ndim: int, count: int = N_DIRECTIONS, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    xi = rng.standard_normal((count, ndim))
    xi /= np.linalg.norm(xi, axis=1, keepdims=True)
    return np.vstack([np.eye(ndim), xi])


def validate(field: BlockCoefficientField, grid: TensorGrid) -> ValidationReport:
    """Check boundedness, sampled ellipticity and the structural flags on ``grid``."""
    checks = []
    pts = grid.node_coordinates(interior=False).reshape(-1, grid.ndim)
    try:
        values = field.evaluate(pts)
        finite = np.isfinite(values).all(axis=(1, 2))
        bad = np.flatnonzero(~finite)
        checks.append(
            HypothesisCheck(
                "bounded",
                bad.size == 0,
                tuple(pts[bad[0]]) if bad.size else None,
            )
        )
    except ArithmeticError as exc:
        values = None
        checks.append(HypothesisCheck("bounded", False, None, f"evaluation failed: {exc}"))

    if values is not None and checks[-1].passed:
        xi = _unit_directions(grid.ndim)
        quad = np.einsum("ki,pij,kj->pk", xi, values, xi)
        lam = field.ellipticity_lambda
        p, k = np.unravel_index(np.argmin(quad), quad.shape)
        ok = quad[p, k] >= lam
        checks.append(
            HypothesisCheck(
                "ellipticity",
                bool(ok),
                None if ok else {"point": tuple(pts[p]), "xi": tuple(xi[k])},
                f"min A xi.xi = {quad[p, k]:.6g} vs lambda = {lam:g}",
            )
        )
    else:
        checks.append(HypothesisCheck("ellipticity", False, None, "not checked: unbounded entries"))

    offending = [
        (i + 1, j + 1, f"x{v}")
        for i, j in field.block_pairs(2, 2)
        for v in sorted(variables(field.entries[i][j].ast))
        if v <= field.split
    ]
    checks.append(HypothesisCheck("a22_x2_only", not offending, offending[0] if offending else None))

    nonzero = [(i + 1, j + 1) for b in ((1, 2), (2, 1)) for i, j in field.block_pairs(*b) if not is_zero(field.entries[i][j])]
    checks.append(HypothesisCheck("diagonal_blocks", not nonzero, nonzero[0] if nonzero else None))
    return ValidationReport(tuple(checks))
