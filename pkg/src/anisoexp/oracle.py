"""Exact sine-series solutions for constant diagonal coefficients on boxes.

Each mode ``prod_i sin(k_i (x_i - lower_i))`` with ``k_i = m_i pi / L_i`` is an
eigenfunction of every operator in the hierarchy, so the perturbed solution,
the expansion terms and the residual seminorms all have closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.fft

from .expr import ScalarExpr, evaluate
from .grid import BoxDomain

__all__ = [
    "SineModeSet",
    "oracle_perturbed",
    "oracle_cascade",
    "oracle_residual_coefficient",
    "oracle_residual_seminorm",
    "oracle_seminorm",
    "modes_from_expr",
]


@dataclass(frozen=True)
class SineModeSet:
    """Finite sine series: ``indices[r]`` is the mode multi-index, ``coefficients[r]`` its weight."""

    indices: np.ndarray  # (R, N) integers >= 1
    coefficients: np.ndarray  # (R,)
    domain: BoxDomain

    def __post_init__(self):
        idx = np.atleast_2d(np.asarray(self.indices, dtype=int))
        coef = np.asarray(self.coefficients, dtype=float).reshape(-1)
        if idx.shape != (coef.size, self.domain.ndim):
            raise ValueError(f"indices must be ({coef.size}, {self.domain.ndim}), got {idx.shape}")
        if np.any(idx < 1):
            raise ValueError("mode indices must be >= 1")
        if not np.all(np.isfinite(coef)):
            raise ValueError("coefficients must be finite")
        if len({tuple(r) for r in idx}) != idx.shape[0]:
            raise ValueError("modes must be pairwise distinct")
        idx.setflags(write=False)
        coef.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "coefficients", coef)

    @classmethod
    def single(cls, index: Sequence[int], coefficient: float = 1.0, domain: BoxDomain | None = None):
        domain = domain or BoxDomain.cube(len(index))
        return cls(np.array([index]), np.array([coefficient]), domain)

    @property
    def split(self) -> int:
        return self.domain.split

    @property
    def frequencies(self) -> np.ndarray:
        """Angular frequencies ``k = m pi / L`` per mode and axis."""
        return self.indices * (np.pi / self.domain.lengths)

    def with_coefficients(self, coefficients) -> "SineModeSet":
        return SineModeSet(self.indices, coefficients, self.domain)

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        shifted = pts - np.asarray(self.domain.lower)
        out = np.zeros(pts.shape[:-1])
        for k, c in zip(self.frequencies, self.coefficients):
            if c != 0.0:
                out = out + c * np.prod(np.sin(shifted * k), axis=-1)
        return out


def _symbols(modes: SineModeSet, diag: Sequence[float]):
    """Per-mode X1 and X2 parts of the operator symbol, ``mu`` and ``nu``."""
    a = np.asarray(diag, dtype=float)
    if a.shape != (modes.domain.ndim,) or np.any(a <= 0):
        raise ValueError("need one positive diagonal value per axis")
    k2 = modes.frequencies**2 * a
    q = modes.split
    return k2[:, :q].sum(axis=1), k2[:, q:].sum(axis=1)


def oracle_perturbed(modes: SineModeSet, diag: Sequence[float], eps: float) -> SineModeSet:
    """Exact solution of the eps-scaled problem with source ``modes``."""
    mu, nu = _symbols(modes, diag)
    return modes.with_coefficients(modes.coefficients / (eps**2 * mu + nu))


def oracle_cascade(modes: SineModeSet, diag: Sequence[float], order: int) -> list[SineModeSet]:
    """Exact terms u_0 .. u_order: odd orders vanish, ``u_2k = c (-mu)^k / nu^(k+1)``."""
    mu, nu = _symbols(modes, diag)
    c = modes.coefficients
    terms = []
    for k in range(order + 1):
        if k % 2:
            terms.append(modes.with_coefficients(np.zeros_like(c)))
        else:
            j = k // 2
            terms.append(modes.with_coefficients(c * (-mu) ** j / nu ** (j + 1)))
    return terms


def oracle_residual_coefficient(c, mu, nu, eps, order):
    """Closed form of ``c/(eps^2 mu + nu) - sum_{2j <= order} eps^(2j) c (-mu)^j / nu^(j+1)``."""
    m = order // 2 + 1
    return c * (-(eps**2) * mu) ** m / (nu**m * (eps**2 * mu + nu))


def oracle_seminorm(modes: SineModeSet, block: str) -> float:
    """Exact ``||grad_X1 v||`` or ``||grad_X2 v||`` of a sine series (Parseval)."""
    if block not in ("X1", "X2"):
        raise ValueError("block must be 'X1' or 'X2'")
    q = modes.split
    k2 = modes.frequencies**2
    weight = k2[:, :q].sum(axis=1) if block == "X1" else k2[:, q:].sum(axis=1)
    volume = np.prod(modes.domain.lengths / 2.0)
    return float(np.sqrt(volume * np.sum(modes.coefficients**2 * weight)))


def oracle_residual_seminorm(modes: SineModeSet, diag: Sequence[float], eps: float, order: int, block: str) -> float:
    """Block seminorm of ``u_eps - sum_k eps^k u_k`` for the diagonal cascade."""
    mu, nu = _symbols(modes, diag)
    r = oracle_residual_coefficient(modes.coefficients, mu, nu, eps, order)
    return oracle_seminorm(modes.with_coefficients(r), block)


def modes_from_expr(
    f: ScalarExpr, domain: BoxDomain, subdivisions: Iterable[int], rtol: float = 1e-12
) -> SineModeSet:
    """Sine modes of ``f`` from a type-I DST of its samples on a uniform grid.

    Exact for finite sine series whose indices are below the sampling
    resolution; otherwise the discrete (aliased) coefficients.
    """
    n = tuple(int(v) for v in subdivisions)
    axes = [domain.lower[a] + np.arange(1, n[a]) * domain.lengths[a] / n[a] for a in range(domain.ndim)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    vals = evaluate(f, pts)
    coef = scipy.fft.dstn(vals, type=1) / np.prod(n)
    scale = np.max(np.abs(coef)) if coef.size else 0.0
    keep = np.argwhere(np.abs(coef) > rtol * scale) if scale > 0 else np.zeros((0, domain.ndim), dtype=int)
    return SineModeSet(keep + 1, coef[tuple(keep.T)], domain)
