import numpy as np
import pytest
import scipy.sparse as sp

from anisoexp.assembly import (
    NodalField,
    assemble_block,
    assemble_load,
    assemble_perturbed,
    assemble_slice,
    cascade_rhs,
    slice_loads,
    x1_mass,
)
from anisoexp.coefficients import BlockCoefficientField
from anisoexp.expr import parse
from anisoexp.grid import BoxDomain, build_grid


def field(rows, split=1, lam=1e-3):
    return BlockCoefficientField.from_strings(rows, split, lam)


IDENT = field([["1", "0"], ["0", "1"]])
ZERO = parse("0", 2)


def test_laplacian_stencil(square_grid):
    sys_ = assemble_perturbed(IDENT, 1.0, square_grid, ZERO)
    g = square_grid.global_index((8, 8))
    row = sys_.matrix.getrow(g).toarray().ravel()
    assert row[g] == pytest.approx(8 / 3, rel=1e-14)
    neighbours = [square_grid.global_index((8 + a, 8 + b)) for a in (-1, 0, 1) for b in (-1, 0, 1) if (a, b) != (0, 0)]
    np.testing.assert_allclose(row[neighbours], -1 / 3, rtol=1e-13)
    assert np.count_nonzero(np.abs(row) > 1e-15) == 9


def test_zero_load(square_grid):
    assert not np.any(assemble_perturbed(IDENT, 0.5, square_grid, ZERO).rhs)


def test_eps_scales_x1_part(square_grid):
    k11 = assemble_block(IDENT, square_grid, 1, 1)
    k22 = assemble_block(IDENT, square_grid, 2, 2)
    m1 = assemble_perturbed(IDENT, 1.0, square_grid, ZERO).matrix
    m5 = assemble_perturbed(IDENT, 0.5, square_grid, ZERO).matrix
    assert abs(m1 - (k11 + k22)).max() < 1e-13
    assert abs(m5 - (0.25 * k11 + k22)).max() < 1e-13


@pytest.mark.parametrize("eps", [1.0, 0.5, 0.1])
def test_block_decomposition(eps):
    a = field([["1+0.5*sin(x1)", "0.3*cos(x2)"], ["0.3*cos(x2)", "2+x2"]])
    grid = build_grid(BoxDomain.cube(2, 1), (12, 10))
    blocks = {(r, c): assemble_block(a, grid, r, c) for r in (1, 2) for c in (1, 2)}
    combined = eps**2 * blocks[1, 1] + eps * (blocks[1, 2] + blocks[2, 1]) + blocks[2, 2]
    full = assemble_perturbed(a, eps, grid, ZERO).matrix
    assert abs(full - combined).max() <= 1e-13


def test_block_decomposition_3d():
    a = field([["1", "0", "0.2"], ["0", "1", "0"], ["0.2", "0", "1+x3^2"]], split=2)
    grid = build_grid(BoxDomain.cube(3, 2), (5, 6, 7))
    b = {(r, c): assemble_block(a, grid, r, c) for r in (1, 2) for c in (1, 2)}
    eps = 0.3
    combined = eps**2 * b[1, 1] + eps * (b[1, 2] + b[2, 1]) + b[2, 2]
    assert abs(assemble_perturbed(a, eps, grid, parse("0", 3)).matrix - combined).max() <= 1e-13


def test_symmetric_positive_definite(rng):
    a = field([["1+0.5*sin(x1)", "0.3"], ["0.3", "1+0.2*x2"]])
    grid = build_grid(BoxDomain.cube(2, 1), (16, 16))
    for eps in (1.0, 0.25):
        m = assemble_perturbed(a, eps, grid, ZERO).matrix
        diff = abs(m - m.T)
        assert diff.max() <= 1e-12 * max(abs(m).max(), 1.0)
        for _ in range(100):
            v = rng.standard_normal(grid.n_interior)
            assert v @ (m @ v) > 0


def test_q1_row_pattern(square_grid):
    m = assemble_perturbed(IDENT, 0.7, square_grid, ZERO).matrix
    assert np.diff(m.indptr).max() <= 9


def test_load_of_constant():
    grid = build_grid(BoxDomain((0, 0), (1, 1), 1), (4, 4))
    b = assemble_load(parse("1", 2), grid)
    np.testing.assert_allclose(b, (1 / 4) ** 2)


def test_slice_tridiagonal():
    grid = build_grid(BoxDomain.cube(2, 1), (4, 4))
    s = assemble_slice(IDENT, grid)
    h = np.pi / 4
    expected = (2 * np.eye(3) - np.eye(3, k=1) - np.eye(3, k=-1)) / h
    np.testing.assert_allclose(s.matrix.toarray(), expected, rtol=1e-14)
    assert s.bandwidth == 1


def test_slice_variable_coefficient_against_dense_quadrature():
    grid = build_grid(BoxDomain.cube(2, 1), (4, 6))
    s = assemble_slice(field([["1", "0"], ["0", "1+x2"]]), grid).matrix.toarray()
    # hat-function derivatives integrated on a fine midpoint grid
    nodes = grid.axis_nodes(1)
    h = grid.spacing[1]
    x = np.linspace(0, np.pi, 600001)
    xm = 0.5 * (x[1:] + x[:-1])
    dx = np.diff(x)
    dpsi = []
    for i in range(1, len(nodes) - 1):
        d = np.where((xm > nodes[i - 1]) & (xm < nodes[i]), 1 / h, 0.0)
        d = np.where((xm > nodes[i]) & (xm < nodes[i + 1]), -1 / h, d)
        dpsi.append(d)
    dense = np.array([[np.sum((1 + xm) * a * b * dx) for b in dpsi] for a in dpsi])
    np.testing.assert_allclose(s, dense, rtol=1e-6, atol=1e-9)


def test_slice_rejects_x1_dependence():
    grid = build_grid(BoxDomain.cube(2, 1), (4, 4))
    with pytest.raises(ValueError, match="X1"):
        assemble_slice(field([["1", "0"], ["0", "1+x1"]]), grid)


def test_k22_is_mass_times_slice_stiffness():
    a = field([["1", "0"], ["0", "2+cos(x2)"]])
    grid = build_grid(BoxDomain.cube(2, 1), (7, 9))
    k22 = assemble_block(a, grid, 2, 2)
    kron = sp.kron(x1_mass(grid), assemble_slice(a, grid).matrix)
    assert abs(k22 - kron).max() < 1e-13


def _max_rel(a, b):
    return np.max(np.abs(a - b)) / np.max(np.abs(b))


def test_cascade_rhs_second_order_diagonal():
    errs = []
    for n in (16, 32, 64):
        grid = build_grid(BoxDomain.cube(2, 1), (n, n))
        u0 = NodalField.interpolate(grid, parse("sin(x1)*sin(x2)", 2))
        rhs = cascade_rhs(2, NodalField.zeros(grid), u0, IDENT, grid)
        errs.append(_max_rel(rhs, slice_loads(parse("-sin(x1)*sin(x2)", 2), grid)))
    assert errs[-1] < 1e-3
    assert np.log2(errs[0] / errs[1]) > 1.8 and np.log2(errs[1] / errs[2]) > 1.8


def test_cascade_rhs_first_order_coupling():
    c = 0.3
    a = field([["1", str(c)], [str(c), "1"]])
    errs = []
    for n in (16, 32, 64):
        grid = build_grid(BoxDomain.cube(2, 1), (n, n))
        u0 = NodalField.interpolate(grid, parse("sin(x1)*sin(x2)", 2))
        rhs = cascade_rhs(1, u0, None, a, grid)
        errs.append(_max_rel(rhs, slice_loads(parse(f"2*{c}*cos(x1)*cos(x2)", 2), grid)))
    assert errs[-1] < 2e-3
    assert np.log2(errs[1] / errs[2]) > 1.8


def test_cascade_rhs_first_order_diagonal_is_zero(square_grid):
    u0 = NodalField.interpolate(square_grid, parse("sin(x1)*sin(x2)", 2))
    for scheme in ("strong", "galerkin"):
        assert not np.any(cascade_rhs(1, u0, None, IDENT, square_grid, scheme=scheme))


@pytest.mark.parametrize("scheme", ["strong", "galerkin"])
def test_cascade_rhs_linear(scheme, square_grid, rng):
    a = field([["1+0.5*sin(x1)", "0.2"], ["0.2", "1"]])
    u = NodalField(rng.standard_normal(square_grid.n_interior), square_grid)
    v = NodalField(rng.standard_normal(square_grid.n_interior), square_grid)
    w = NodalField(rng.standard_normal(square_grid.n_interior), square_grid)
    lhs = cascade_rhs(2, 2.0 * u + v, w, a, square_grid, scheme=scheme)
    rhs = 2.0 * cascade_rhs(2, u, w * 0.0, a, square_grid, scheme=scheme) + cascade_rhs(2, v, w, a, square_grid, scheme=scheme)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * np.abs(lhs).max())


def test_cascade_rhs_argument_checks(square_grid):
    u = NodalField.zeros(square_grid)
    with pytest.raises(ValueError):
        cascade_rhs(0, u, None, IDENT, square_grid)
    with pytest.raises(ValueError):
        cascade_rhs(2, u, None, IDENT, square_grid)
    with pytest.raises(ValueError):
        cascade_rhs(1, u, None, IDENT, square_grid, scheme="spectral")


def test_nodal_field_interpolant(square_grid):
    u = NodalField.interpolate(square_grid, parse("sin(x1)*sin(x2)", 2))
    assert u.full().shape == (17, 17)
    assert u.at([[np.pi / 2, np.pi / 2]])[0] == pytest.approx(1.0)
    assert u.at([[0.0, 1.0]])[0] == 0.0
    with pytest.raises(ValueError):
        NodalField(np.zeros(3), square_grid)
