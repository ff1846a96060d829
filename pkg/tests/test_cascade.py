import numpy as np
import pytest

from anisoexp.assembly import NodalField
from anisoexp.cascade import resolve_branch, solve_cascade, solve_limit
from anisoexp.coefficients import BlockCoefficientField
from anisoexp.expr import parse
from anisoexp.grid import BoxDomain, build_grid

IDENT = BlockCoefficientField.identity()


def grid2(n=32, m=None):
    return build_grid(BoxDomain.cube(2, 1), (n, m or n))


def interp(grid, text):
    return NodalField.interpolate(grid, parse(text, grid.ndim)).values


@pytest.mark.parametrize("scheme", ["strong", "galerkin"])
def test_limit_of_sine_product(scheme):
    errs = []
    for n in (16, 32):
        g = grid2(n)
        u0 = solve_limit(IDENT, parse("sin(x1)*sin(x2)", 2), g, scheme=scheme)
        errs.append(np.max(np.abs(u0.values - interp(g, "sin(x1)*sin(x2)"))))
    assert errs[1] < 2e-3
    assert np.log2(errs[0] / errs[1]) > 1.8


def test_limit_zero_source():
    assert solve_limit(IDENT, parse("0", 2), grid2(8)).max_abs() == 0.0


def test_limit_second_mode():
    g = grid2(64)
    u0 = solve_limit(IDENT, parse("sin(x1)*sin(2*x2)", 2), g)
    np.testing.assert_allclose(u0.values, interp(g, "sin(x1)*sin(2*x2)/4"), atol=1e-3)


@pytest.mark.parametrize("scheme", ["strong", "galerkin"])
def test_single_mode_series_alternates(scheme):
    g = grid2(64)
    res = solve_cascade(IDENT, parse("sin(x1)*sin(x2)", 2), g, 2, scheme=scheme)
    s = interp(g, "sin(x1)*sin(x2)")
    assert res.branch == "diagonal" and len(res.terms) == 3
    assert np.max(np.abs(res.terms[0].values - s)) < 1e-3
    assert res.terms[1].max_abs() == 0.0
    assert np.max(np.abs(res.terms[2].values + s)) < 2e-3


def test_second_term_of_mode_one_two():
    g = grid2(64)
    res = solve_cascade(IDENT, parse("sin(x1)*sin(2*x2)", 2), g, 2)
    np.testing.assert_allclose(res.terms[2].values, -interp(g, "sin(x1)*sin(2*x2)") / 16, atol=5e-4)


def test_order_zero():
    res = solve_cascade(IDENT, parse("sin(x1)*sin(x2)", 2), grid2(8), 0)
    assert res.order == 0 and len(res.terms) == 1


def test_order_bounds():
    with pytest.raises(ValueError):
        solve_cascade(IDENT, parse("1", 2), grid2(8), 7)


def test_branch_resolution():
    coupled = BlockCoefficientField.from_strings([["1", "0.3"], ["0.3", "1"]], 1)
    assert resolve_branch(IDENT) == "diagonal"
    assert resolve_branch(coupled) == "general"
    with pytest.raises(ValueError):
        resolve_branch(coupled, "diagonal")
    with pytest.raises(ValueError):
        resolve_branch(IDENT, "sideways")


@pytest.mark.parametrize("scheme", ["strong", "galerkin"])
def test_general_branch_reproduces_diagonal(scheme):
    a = BlockCoefficientField.from_strings([["1+0.5*sin(x1)", "0"], ["0", "1"]], 1)
    f = parse("sin(x1)^2*sin(x2)", 2)
    g = grid2(32)
    diag = solve_cascade(a, f, g, 4, branch="diagonal", scheme=scheme)
    gen = solve_cascade(a, f, g, 4, branch="general", scheme=scheme)
    scale = max(t.max_abs() for t in diag.terms)
    for k in range(5):
        assert np.max(np.abs(gen.terms[k].values - diag.terms[k].values)) <= 1e-10 * scale


@pytest.mark.parametrize("scheme", ["strong", "galerkin"])
def test_linear_in_source(scheme):
    a = BlockCoefficientField.from_strings([["1", "0.3"], ["0.3", "1+0.1*x2"]], 1)
    g = grid2(16)
    r1 = solve_cascade(a, parse("sin(x1)*x2*(pi-x2)", 2), g, 3, scheme=scheme)
    r2 = solve_cascade(a, parse("x1*(pi-x1)*cos(x2)", 2), g, 3, scheme=scheme)
    r3 = solve_cascade(a, parse("2*sin(x1)*x2*(pi-x2) - 3*x1*(pi-x1)*cos(x2)", 2), g, 3, scheme=scheme)
    for k in range(4):
        combo = 2 * r1.terms[k].values - 3 * r2.terms[k].values
        np.testing.assert_allclose(r3.terms[k].values, combo, atol=1e-11 * max(np.abs(combo).max(), 1))


def test_separable_source_gives_rank_one_limit():
    g = grid2(48, 40)
    a = BlockCoefficientField.from_strings([["2", "0"], ["0", "3"]], 1)
    u0 = solve_limit(a, parse("x1*(pi-x1)*sin(x2)", 2), g)
    s = np.linalg.svd(u0.as_array(), compute_uv=False)
    assert s[1] <= 1e-9 * s[0]


def test_three_dimensional_two_x1_axes():
    g = build_grid(BoxDomain.cube(3, 2), (16, 16, 16))
    a = BlockCoefficientField.identity(3, 2)
    res = solve_cascade(a, parse("sin(x1)*sin(x2)*sin(x3)", 3), g, 2)
    s = interp(g, "sin(x1)*sin(x2)*sin(x3)")
    assert np.max(np.abs(res.terms[0].values - s)) < 5e-3
    # u_2 = -(mu/nu) u_0 with mu = 2, nu = 1
    assert np.max(np.abs(res.terms[2].values + 2 * s)) < 2e-2


def test_partial_sum():
    g = grid2(16)
    res = solve_cascade(IDENT, parse("sin(x1)*sin(x2)", 2), g, 2)
    ps = res.partial_sum(0.5)
    np.testing.assert_allclose(ps.values, res.terms[0].values + 0.25 * res.terms[2].values)
    np.testing.assert_allclose(res.partial_sum(0.5, 0).values, res.terms[0].values)
