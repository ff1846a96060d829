"""Box domains split as X1 x X2 and uniform tensor grids over them.

Interior nodes are numbered lexicographically in C order with ``x1`` the
slowest axis, so the X2 nodes of one X1 slice are contiguous.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = ["BoxDomain", "TensorGrid", "build_grid", "slice_nodes"]


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box ``prod(lower[i], upper[i])``; axes ``< split`` form X1."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    split: int

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if len(lower) != len(upper):
            raise ValueError("lower and upper must have the same length")
        if len(lower) < 2:
            raise ValueError("domain dimension must be at least 2")
        if not all(a < b for a, b in zip(lower, upper)):
            raise ValueError("need lower[i] < upper[i] on every axis")
        if not 1 <= self.split < len(lower):
            raise ValueError(f"split must satisfy 1 <= q < N, got q={self.split}, N={len(lower)}")

    @property
    def ndim(self) -> int:
        return len(self.lower)

    @property
    def lengths(self) -> np.ndarray:
        return np.subtract(self.upper, self.lower)

    @classmethod
    def cube(cls, ndim: int = 2, split: int = 1, length: float = np.pi) -> "BoxDomain":
        return cls((0.0,) * ndim, (float(length),) * ndim, split)


@dataclass(frozen=True)
class TensorGrid:
    domain: BoxDomain
    subdivisions: tuple[int, ...]
    spacing: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = tuple(int(v) for v in self.subdivisions)
        object.__setattr__(self, "subdivisions", n)
        if len(n) != self.domain.ndim:
            raise ValueError(f"need {self.domain.ndim} subdivision counts, got {len(n)}")
        if any(v < 2 for v in n):
            raise ValueError(f"every axis needs at least 2 subdivisions, got {n}")
        h = self.domain.lengths / np.asarray(n, dtype=float)
        h.setflags(write=False)
        object.__setattr__(self, "spacing", h)

    @property
    def ndim(self) -> int:
        return self.domain.ndim

    @property
    def split(self) -> int:
        return self.domain.split

    @property
    def interior_shape(self) -> tuple[int, ...]:
        return tuple(v - 1 for v in self.subdivisions)

    @property
    def n_interior(self) -> int:
        return int(np.prod(self.interior_shape))

    @property
    def x1_shape(self) -> tuple[int, ...]:
        return self.interior_shape[: self.split]

    @property
    def x2_shape(self) -> tuple[int, ...]:
        return self.interior_shape[self.split :]

    @property
    def n_slices(self) -> int:
        return int(np.prod(self.x1_shape))

    @property
    def slice_size(self) -> int:
        return int(np.prod(self.x2_shape))

    def axis_nodes(self, axis: int) -> np.ndarray:
        """All node coordinates (boundary included) along ``axis``."""
        n = self.subdivisions[axis]
        return self.domain.lower[axis] + np.arange(n + 1) * self.spacing[axis]

    def node_coordinates(self, interior: bool = True) -> np.ndarray:
        """Coordinates of the nodes, shape ``(*node_shape, N)``."""
        axes = [self.axis_nodes(a) for a in range(self.ndim)]
        if interior:
            axes = [ax[1:-1] for ax in axes]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def global_index(self, multi_index: Sequence[int]) -> int:
        """Interior multi-index (entries in ``1..n_i-1``) to lexicographic index."""
        idx = np.asarray(multi_index, dtype=int)
        if idx.shape != (self.ndim,) or np.any(idx < 1) or np.any(idx > np.asarray(self.interior_shape)):
            raise IndexError(f"{tuple(multi_index)} is not an interior multi-index")
        return int(np.ravel_multi_index(tuple(idx - 1), self.interior_shape))

    def multi_index(self, g: int) -> tuple[int, ...]:
        if not 0 <= g < self.n_interior:
            raise IndexError(f"interior index {g} out of range")
        return tuple(int(v) + 1 for v in np.unravel_index(g, self.interior_shape))


def build_grid(domain: BoxDomain, subdivisions: Sequence[int]) -> TensorGrid:
    """Uniform grid with ``subdivisions[i]`` cells along axis ``i``."""
    return TensorGrid(domain, tuple(subdivisions))


def slice_nodes(grid: TensorGrid, x1_multi_index: Sequence[int] | int) -> np.ndarray:
    """Global interior indices of the X2 slice through an interior X1 node."""
    if np.isscalar(x1_multi_index):
        x1_multi_index = (x1_multi_index,)
    idx = np.asarray(x1_multi_index, dtype=int)
    if idx.shape != (grid.split,) or np.any(idx < 1) or np.any(idx > np.asarray(grid.x1_shape)):
        raise IndexError(f"{tuple(idx)} is not an interior X1 multi-index")
    s = int(np.ravel_multi_index(tuple(idx - 1), grid.x1_shape))
    return np.arange(s * grid.slice_size, (s + 1) * grid.slice_size)
