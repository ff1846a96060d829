"""Q1 finite element assembly on tensor grids.

Builds the eps-scaled stiffness system on the whole box, the stiffness of one
X2 slice (identical for every slice when A22 depends on X2 only), and the
per-slice loads that drive each order of the cascade.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import RegularGridInterpolator

from .coefficients import BlockCoefficientField, block_of, scaled_block_weight
from .expr import ScalarExpr, evaluate, is_zero
from .grid import TensorGrid

__all__ = [
    "NodalField",
    "SparseSymSystem",
    "SliceSystem",
    "Q1Mesh",
    "assemble_block",
    "assemble_perturbed",
    "assemble_load",
    "assemble_slice",
    "slice_loads",
    "x1_mass",
    "cascade_rhs",
    "SCHEMES",
]

SCHEMES = ("strong", "galerkin")

_GAUSS = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])


class NodalField:
    """Values on the interior nodes of ``grid``; boundary values are zero."""

    __slots__ = ("values", "grid")

    def __init__(self, values, grid: TensorGrid):
        values = np.asarray(values, dtype=float).reshape(-1)
        if values.size != grid.n_interior:
            raise ValueError(f"expected {grid.n_interior} interior values, got {values.size}")
        self.values = values
        self.grid = grid

    @classmethod
    def zeros(cls, grid: TensorGrid) -> "NodalField":
        return cls(np.zeros(grid.n_interior), grid)

    @classmethod
    def interpolate(cls, grid: TensorGrid, func) -> "NodalField":
        """Nodal interpolant of an expression or of a callable on ``(..., N)`` points."""
        pts = grid.node_coordinates(interior=True)
        vals = evaluate(func, pts) if isinstance(func, ScalarExpr) else func(pts)
        return cls(np.asarray(vals).reshape(-1), grid)

    def as_array(self) -> np.ndarray:
        """Interior values with shape ``grid.interior_shape``."""
        return self.values.reshape(self.grid.interior_shape)

    def full(self) -> np.ndarray:
        """Values on all nodes, boundary zeros included."""
        out = np.zeros(tuple(n + 1 for n in self.grid.subdivisions))
        out[tuple(slice(1, -1) for _ in range(self.grid.ndim))] = self.as_array()
        return out

    def slices(self) -> np.ndarray:
        """Values as ``(n_slices, slice_size)``."""
        return self.values.reshape(self.grid.n_slices, self.grid.slice_size)

    def at(self, points) -> np.ndarray:
        """Q1 (multilinear) interpolant evaluated at arbitrary points ``(..., N)``."""
        axes = [self.grid.axis_nodes(a) for a in range(self.grid.ndim)]
        interp = RegularGridInterpolator(axes, self.full(), method="linear")
        return interp(np.asarray(points, dtype=float))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def _check(self, other: "NodalField"):
        if other.grid != self.grid:
            raise ValueError("nodal fields live on different grids")

    def __add__(self, other):
        self._check(other)
        return NodalField(self.values + other.values, self.grid)

    def __sub__(self, other):
        self._check(other)
        return NodalField(self.values - other.values, self.grid)

    def __mul__(self, alpha):
        return NodalField(float(alpha) * self.values, self.grid)

    __rmul__ = __mul__

    def __neg__(self):
        return NodalField(-self.values, self.grid)

    def __repr__(self):
        return f"NodalField(n={self.values.size}, max|v|={self.max_abs():.3g})"


@dataclass(frozen=True)
class SparseSymSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    symmetric: bool
    grid: TensorGrid


@dataclass(frozen=True)
class SliceSystem:
    """Stiffness of one X2 slice, in CSR and in upper banded storage."""

    matrix: sp.csr_matrix
    banded: np.ndarray  # LAPACK upper form, shape (bandwidth + 1, n)
    bandwidth: int
    grid: TensorGrid

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def to_upper_banded(matrix) -> tuple[np.ndarray, int]:
    m = sp.coo_matrix(matrix)
    upper = m.row <= m.col
    rows, cols, data = m.row[upper], m.col[upper], m.data[upper]
    u = int((cols - rows).max()) if data.size else 0
    ab = np.zeros((u + 1, m.shape[0]))
    np.add.at(ab, (u + rows - cols, cols), data)
    return ab, u


class Q1Mesh:
    """Uniform Q1 mesh over a subset of grid axes.

    Local nodes and Gauss points are enumerated as corners of ``{0,1}^dim`` in
    C order; the physical gradients are the same on every cell.
    """

    def __init__(self, lower, spacing, subdivisions):
        self.lower = np.asarray(lower, dtype=float)
        self.h = np.asarray(spacing, dtype=float)
        self.n = tuple(int(v) for v in subdivisions)
        self.dim = len(self.n)
        self.node_shape = tuple(v + 1 for v in self.n)
        corners = np.array(list(itertools.product((0, 1), repeat=self.dim)), dtype=int).reshape(-1, self.dim)
        self.n_loc = corners.shape[0]

        t = _GAUSS[corners]  # (nq, dim) reference coords of Gauss points
        phi = np.where(corners[None, :, :] == 1, t[:, None, :], 1.0 - t[:, None, :])  # (nq, nloc, dim)
        dphi = np.where(corners == 1, 1.0, -1.0) / self.h
        self.basis = np.prod(phi, axis=2) if self.dim else np.ones((1, 1))
        grads = np.empty((self.n_loc, self.n_loc, self.dim))
        for d in range(self.dim):
            others = np.prod(np.delete(phi, d, axis=2), axis=2)
            grads[:, :, d] = dphi[None, :, d] * others
        self.grads = grads
        self.weights = np.full(self.n_loc, np.prod(self.h) / self.n_loc)
        self.qp_ref = t

        origins = np.stack(np.meshgrid(*[np.arange(v) for v in self.n], indexing="ij"), axis=-1).reshape(-1, self.dim)
        self.n_elem = origins.shape[0]
        self.origins = origins
        self.conn = np.ravel_multi_index(
            tuple((origins[:, None, :] + corners[None, :, :]).transpose(2, 0, 1)), self.node_shape
        )

        interior = np.zeros(self.node_shape, dtype=bool)
        interior[tuple(slice(1, -1) for _ in range(self.dim))] = True
        interior = interior.reshape(-1)
        self.interior_index = np.full(interior.size, -1)
        self.interior_index[interior] = np.arange(interior.sum())
        self.n_interior = int(interior.sum())
        self.n_nodes = interior.size

        # scatter of local element vectors onto all mesh nodes
        cols = np.arange(self.n_elem * self.n_loc)
        self.scatter = sp.csr_matrix(
            (np.ones(cols.size), (self.conn.reshape(-1), cols)), shape=(self.n_nodes, cols.size)
        )

    def qp_coordinates(self) -> np.ndarray:
        """Physical coordinates of Gauss points, shape ``(n_elem, n_qp, dim)``."""
        return self.lower + (self.origins[:, None, :] + self.qp_ref[None, :, :]) * self.h

    def matrix_from_local(self, local: np.ndarray) -> sp.csr_matrix:
        """Sum element matrices ``(n_elem, nloc, nloc)`` and keep interior rows/cols."""
        rows = np.broadcast_to(self.conn[:, :, None], local.shape).reshape(-1)
        cols = np.broadcast_to(self.conn[:, None, :], local.shape).reshape(-1)
        ri, ci = self.interior_index[rows], self.interior_index[cols]
        keep = (ri >= 0) & (ci >= 0)
        m = sp.coo_matrix((local.reshape(-1)[keep], (ri[keep], ci[keep])), shape=(self.n_interior,) * 2)
        m = m.tocsr()
        m.sum_duplicates()
        m.sort_indices()
        return m

    def vector_from_local(self, local: np.ndarray) -> np.ndarray:
        """Sum element vectors ``(..., n_elem, nloc)`` and keep interior nodes."""
        lead = local.shape[:-2]
        flat = local.reshape(-1, self.n_elem * self.n_loc)
        full = (self.scatter @ flat.T).T
        return full[:, self.interior_index >= 0].reshape(lead + (self.n_interior,))

    def values_at_qp(self, nodal: np.ndarray) -> np.ndarray:
        """Q1 interpolant of all-node values ``(..., n_nodes)`` at Gauss points."""
        return np.einsum("...ea,qa->...eq", nodal[..., self.conn], self.basis)

    def gradient_at_qp(self, nodal: np.ndarray, axis: int) -> np.ndarray:
        return np.einsum("...ea,qa->...eq", nodal[..., self.conn], self.grads[:, :, axis])

    def mass_matrix(self) -> sp.csr_matrix:
        local = np.einsum("q,qa,qb->ab", self.weights, self.basis, self.basis)
        return self.matrix_from_local(np.broadcast_to(local, (self.n_elem,) + local.shape))

    def stiffness(self, coeff: np.ndarray) -> sp.csr_matrix:
        """Stiffness for coefficient values ``coeff[e, q, i, j]`` (mesh-local axes)."""
        local = np.einsum("q,eqij,qbj,qai->eab", self.weights, coeff, self.grads, self.grads)
        return self.matrix_from_local(local)


@lru_cache(maxsize=64)
def _mesh(lower: tuple, spacing: tuple, subdivisions: tuple) -> Q1Mesh:
    return Q1Mesh(lower, spacing, subdivisions)


def full_mesh(grid: TensorGrid) -> Q1Mesh:
    return _mesh(grid.domain.lower, tuple(grid.spacing), grid.subdivisions)


def x1_mesh(grid: TensorGrid) -> Q1Mesh:
    q = grid.split
    return _mesh(grid.domain.lower[:q], tuple(grid.spacing[:q]), grid.subdivisions[:q])


def x2_mesh(grid: TensorGrid) -> Q1Mesh:
    q = grid.split
    return _mesh(grid.domain.lower[q:], tuple(grid.spacing[q:]), grid.subdivisions[q:])


def _check_grid(field: BlockCoefficientField, grid: TensorGrid):
    if field.ndim != grid.ndim or field.split != grid.split:
        raise ValueError(
            f"coefficient field (N={field.ndim}, q={field.split}) does not match grid (N={grid.ndim}, q={grid.split})"
        )


def assemble_block(field: BlockCoefficientField, grid: TensorGrid, rows: int, cols: int) -> sp.csr_matrix:
    """Unscaled stiffness of one block, e.g. ``rows=1, cols=2`` for A12."""
    _check_grid(field, grid)
    return _assemble(field, grid, lambda i, j: 1.0 if (block_of(i + 1, grid.split), block_of(j + 1, grid.split)) == (rows, cols) else 0.0)


def _assemble(field, grid, weight) -> sp.csr_matrix:
    mesh = full_mesh(grid)
    pts = mesh.qp_coordinates()
    coeff = np.zeros(pts.shape[:2] + (grid.ndim, grid.ndim))
    for i in range(grid.ndim):
        for j in range(grid.ndim):
            w = weight(i, j)
            if w != 0.0 and not is_zero(field.entries[i][j]):
                coeff[..., i, j] = w * evaluate(field.entries[i][j], pts)
    return mesh.stiffness(coeff)


def assemble_load(f: ScalarExpr, grid: TensorGrid) -> np.ndarray:
    """Gauss quadrature of ``f`` against every interior Q1 basis function."""
    mesh = full_mesh(grid)
    fq = evaluate(f, mesh.qp_coordinates())
    local = np.einsum("q,eq,qa->ea", mesh.weights, fq, mesh.basis)
    return mesh.vector_from_local(local)


def assemble_perturbed(field: BlockCoefficientField, eps: float, grid: TensorGrid, f: ScalarExpr) -> SparseSymSystem:
    """Stiffness of ``A_eps`` and load of ``f`` on the interior nodes of ``grid``."""
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    _check_grid(field, grid)
    q = grid.split
    matrix = _assemble(field, grid, lambda i, j: scaled_block_weight(i + 1, j + 1, q, eps))
    symmetric = field.symmetric
    if symmetric:
        matrix = ((matrix + matrix.T) * 0.5).tocsr()
        matrix.sort_indices()
    return SparseSymSystem(matrix, assemble_load(f, grid), symmetric, grid)


def _x2_points(grid: TensorGrid, x1_points: np.ndarray, mesh2: Q1Mesh) -> np.ndarray:
    """Full coordinates of X2 Gauss points on slices at ``x1_points`` (S, q)."""
    qp2 = mesh2.qp_coordinates()  # (E, Q, N-q)
    S = x1_points.shape[0]
    pts = np.empty((S,) + qp2.shape[:2] + (grid.ndim,))
    pts[..., : grid.split] = x1_points[:, None, None, :]
    pts[..., grid.split :] = qp2[None]
    return pts


def assemble_slice(field: BlockCoefficientField, grid: TensorGrid) -> SliceSystem:
    """Stiffness of ``A22`` on one X2 slice; requires A22 to ignore X1."""
    _check_grid(field, grid)
    if not field.a22_x2_only:
        raise ValueError("A22 references X1 variables; slice systems need A22 = A22(X2)")
    mesh2 = x2_mesh(grid)
    q = grid.split
    centre = 0.5 * (np.asarray(grid.domain.lower[:q]) + np.asarray(grid.domain.upper[:q]))
    pts = _x2_points(grid, centre[None, :], mesh2)[0]
    m = grid.ndim - q
    coeff = np.zeros(pts.shape[:2] + (m, m))
    for i, j in field.block_pairs(2, 2):
        if not is_zero(field.entries[i][j]):
            coeff[..., i - q, j - q] = evaluate(field.entries[i][j], pts)
    matrix = mesh2.stiffness(coeff)
    if field.symmetric:
        matrix = ((matrix + matrix.T) * 0.5).tocsr()
        matrix.sort_indices()
    elif abs(matrix - matrix.T).max() > 1e-12 * max(abs(matrix).max(), 1.0):
        raise ValueError("A22 slice operator is not symmetric; banded Cholesky needs symmetric A22")
    ab, u = to_upper_banded(matrix)
    return SliceSystem(matrix, ab, u, grid)


def x1_mass(grid: TensorGrid) -> sp.csr_matrix:
    """Q1 mass matrix over the interior X1 nodes."""
    return x1_mesh(grid).mass_matrix()


def x1_node_points(grid: TensorGrid, interior: bool = True) -> np.ndarray:
    """X1 coordinates of slice nodes as ``(*x1_shape, q)``."""
    axes = [grid.axis_nodes(a) for a in range(grid.split)]
    if interior:
        axes = [ax[1:-1] for ax in axes]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def slice_loads(f: ScalarExpr, grid: TensorGrid) -> np.ndarray:
    """``int f(X1_s, .) psi dX2`` for every interior X1 node s; ``(n_slices, slice_size)``."""
    mesh2 = x2_mesh(grid)
    x1 = x1_node_points(grid).reshape(-1, grid.split)
    fq = evaluate(f, _x2_points(grid, x1, mesh2))
    local = np.einsum("q,seq,qa->sea", mesh2.weights, fq, mesh2.basis)
    return mesh2.vector_from_local(local)


# ---------------------------------------------------------------------------
# cascade sources


def _x1_full_slices(u: NodalField) -> np.ndarray:
    """All-node values as ``(*x1_node_shape, n_x2_nodes)``."""
    g = u.grid
    full = u.full()
    return full.reshape(full.shape[: g.split] + (-1,))


def _central(a: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Central difference along ``axis``; zero on the first and last positions."""
    out = np.zeros_like(a)
    lo = [slice(None)] * a.ndim
    hi = [slice(None)] * a.ndim
    mid = [slice(None)] * a.ndim
    lo[axis], hi[axis], mid[axis] = slice(None, -2), slice(2, None), slice(1, -1)
    out[tuple(mid)] = (a[tuple(hi)] - a[tuple(lo)]) / (2.0 * h)
    return out


def _interior_x1(a: np.ndarray, q: int) -> np.ndarray:
    return a[tuple(slice(1, -1) for _ in range(q))]


def _slice_functional(grid, expr, x1_pts, values_qp, test_axis=None):
    """``int c(X1_s, X2) v(X2) chi(X2) dX2`` for chi = psi or d psi / d x_{test_axis}.

    ``x1_pts`` has shape ``(*lead, q)``, ``values_qp`` ``(*lead, E, Q)``.
    Returns ``(*lead, slice_size)``.
    """
    mesh2 = x2_mesh(grid)
    lead = x1_pts.shape[:-1]
    pts = _x2_points(grid, x1_pts.reshape(-1, grid.split), mesh2)
    coeff = evaluate(expr, pts).reshape(lead + pts.shape[1:3])
    integrand = coeff * values_qp
    test = mesh2.basis if test_axis is None else mesh2.grads[:, :, test_axis]
    local = np.einsum("q,...eq,qa->...ea", mesh2.weights, integrand, test)
    return mesh2.vector_from_local(local)


def _strong_rhs(k, u_prev, u_prev2, field, grid, coupling=True) -> np.ndarray:
    q = grid.split
    h = grid.spacing
    mesh2 = x2_mesh(grid)
    x1_all = x1_node_points(grid, interior=False)
    x1_int = x1_node_points(grid, interior=True)
    total = np.zeros(grid.x1_shape + (grid.slice_size,))

    if coupling and not field.diagonal_blocks:
        U = _x1_full_slices(u_prev)
        # X2-divergence of A21 grad_X1 u_{k-1}, moved onto the slice test functions
        for j, i in field.block_pairs(2, 1):
            if is_zero(field.entries[j][i]):
                continue
            dU = _interior_x1(_central(U, i, h[i]), q)
            total -= _slice_functional(grid, field.entries[j][i], x1_int, mesh2.values_at_qp(dU), test_axis=j - q)
        # X1-divergence of A12 grad_X2 u_{k-1}: slice integrals, then central differences across slices
        for i, j in field.block_pairs(1, 2):
            if is_zero(field.entries[i][j]):
                continue
            phi = _slice_functional(grid, field.entries[i][j], x1_all, mesh2.gradient_at_qp(U, j - q))
            total += _interior_x1(_central(phi, i, h[i]), q)

    if k >= 2:
        U2 = _x1_full_slices(u_prev2)
        for i, ip in field.block_pairs(1, 1):
            expr = field.entries[i][ip]
            if is_zero(expr):
                continue
            if i == ip:
                # compact three-point form: fluxes at cell midpoints along axis i
                lo = [slice(None)] * q
                hi = [slice(None)] * q
                lo[i], hi[i] = slice(None, -1), slice(1, None)
                jump = (U2[tuple(hi)] - U2[tuple(lo)]) / h[i]
                mids = 0.5 * (x1_all[tuple(hi)] + x1_all[tuple(lo)])
                flux = _slice_functional(grid, expr, mids, mesh2.values_at_qp(jump))
                div = (flux[tuple(hi)] - flux[tuple(lo)]) / h[i]
                sel = [slice(1, -1)] * q
                sel[i] = slice(None)
                total += div[tuple(sel)]
            else:
                dU = _central(U2, ip, h[ip])
                phi = _slice_functional(grid, expr, x1_all, mesh2.values_at_qp(dU))
                total += _interior_x1(_central(phi, i, h[i]), q)

    return total.reshape(grid.n_slices, grid.slice_size)


@lru_cache(maxsize=16)
def _blocks(field: BlockCoefficientField, grid: TensorGrid):
    k11 = assemble_block(field, grid, 1, 1)
    coupling = (assemble_block(field, grid, 1, 2) + assemble_block(field, grid, 2, 1)).tocsr()
    return k11, coupling


def galerkin_rhs(k, u_prev, u_prev2, field, grid, coupling=True) -> np.ndarray:
    """Full-space Galerkin source ``-(K12 + K21) u_{k-1} - K11 u_{k-2}``."""
    k11, kc = _blocks(field, grid)
    g = np.zeros(grid.n_interior)
    if coupling and not field.diagonal_blocks:
        g -= kc @ u_prev.values
    if k >= 2:
        g -= k11 @ u_prev2.values
    return g


def cascade_rhs(
    k: int,
    u_prev: NodalField,
    u_prev2: NodalField | None,
    field: BlockCoefficientField,
    grid: TensorGrid,
    scheme: str = "strong",
    coupling: bool = True,
) -> np.ndarray:
    """Source of cascade order ``k`` as loads per X2 slice, ``(n_slices, slice_size)``.

    With ``scheme="strong"`` the result is the slice load of order ``k``. With
    ``scheme="galerkin"`` it is the full-space Galerkin source reshaped per
    slice; it still has to be multiplied by the inverse X1 mass matrix before
    the slice solves (see :func:`anisoexp.cascade.solve_cascade`).
    """
    if k < 1:
        raise ValueError("cascade sources exist for k >= 1")
    if (u_prev2 is None) != (k < 2):
        raise ValueError("u_prev2 is required exactly when k >= 2")
    _check_grid(field, grid)
    for u in (u_prev, u_prev2):
        if u is not None and u.grid != grid:
            raise ValueError("nodal field grid does not match")
    if scheme == "strong":
        return _strong_rhs(k, u_prev, u_prev2, field, grid, coupling)
    if scheme == "galerkin":
        return galerkin_rhs(k, u_prev, u_prev2, field, grid, coupling).reshape(grid.n_slices, grid.slice_size)
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
