import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anisoexp.expr import parse
from anisoexp.grid import BoxDomain
from anisoexp.oracle import (
    SineModeSet,
    modes_from_expr,
    oracle_cascade,
    oracle_perturbed,
    oracle_residual_coefficient,
    oracle_residual_seminorm,
    oracle_seminorm,
)

I2 = (1.0, 1.0)


def test_single_mode_coefficient():
    m = SineModeSet.single((1, 1))
    assert oracle_perturbed(m, I2, 0.5).coefficients[0] == pytest.approx(0.8, rel=1e-15)


def test_mode_one_two_at_eps_one():
    m = SineModeSet.single((1, 2))
    assert oracle_perturbed(m, I2, 1.0).coefficients[0] == pytest.approx(0.2, rel=1e-15)


def test_zero_coefficient():
    assert oracle_perturbed(SineModeSet.single((1, 1), 0.0), I2, 0.3).coefficients[0] == 0.0


def test_cascade_alternating_signs():
    terms = oracle_cascade(SineModeSet.single((1, 1)), I2, 6)
    assert [t.coefficients[0] for t in terms] == [1, 0, -1, 0, 1, 0, -1]


def test_cascade_mode_one_two():
    terms = oracle_cascade(SineModeSet.single((1, 2)), I2, 2)
    assert terms[0].coefficients[0] == 0.25
    assert terms[2].coefficients[0] == pytest.approx(-1 / 16)
    assert len(oracle_cascade(SineModeSet.single((1, 2)), I2, 0)) == 1


def test_residual_seminorm_example():
    m = SineModeSet.single((1, 1))
    assert oracle_residual_seminorm(m, I2, 0.5, 2, "X2") == pytest.approx(0.05 * math.pi / 2, rel=1e-14)
    assert oracle_residual_seminorm(m, I2, 1.0, 0, "X2") == pytest.approx(0.5 * math.pi / 2, rel=1e-14)


def test_residual_vanishes_as_eps_goes_to_zero():
    m = SineModeSet.single((2, 1))
    vals = [oracle_residual_seminorm(m, I2, e, 2, "X1") for e in (1e-1, 1e-2, 1e-3)]
    assert vals[2] < 1e-10 and vals[0] > vals[1] > vals[2]


def test_seminorm_parseval():
    assert oracle_seminorm(SineModeSet.single((1, 1)), "X2") == pytest.approx(math.pi / 2)
    assert oracle_seminorm(SineModeSet.single((2, 1)), "X1") == pytest.approx(math.pi)
    with pytest.raises(ValueError):
        oracle_seminorm(SineModeSet.single((1, 1)), "X3")


def _rand_tuple(rng):
    mu = rng.uniform(0.1, 20.0)
    nu = rng.uniform(0.1, 20.0)
    eps = rng.uniform(1e-3, 1.0)
    d = int(rng.integers(0, 7))
    return mu, nu, eps, d


def _direct_residual(c, mu, nu, eps, d):
    u = c / (eps**2 * mu + nu)
    s = sum(eps ** (2 * j) * c * (-mu) ** j / nu ** (j + 1) for j in range(d // 2 + 1))
    return u, s


def test_residual_identity_random_tuples():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        mu, nu, eps, d = _rand_tuple(rng)
        u, s = _direct_residual(1.0, mu, nu, eps, d)
        closed = oracle_residual_coefficient(1.0, mu, nu, eps, d)
        assert abs((u - s) - closed) <= 1e-14 * max(abs(u), abs(s), 1e-300) + 1e-300


def test_odd_terms_are_zero():
    m = SineModeSet(np.array([[1, 1], [2, 3]]), np.array([1.0, -0.5]), BoxDomain.cube(2, 1))
    terms = oracle_cascade(m, (2.0, 0.5), 5)
    for k in (1, 3, 5):
        assert not np.any(terms[k].coefficients)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.floats(0.05, 1.0), st.sampled_from([0, 2, 4]))
def test_perturbed_minus_cascade_equals_residual(m, n, eps, d):
    modes = SineModeSet.single((m, n), 1.7)
    u = oracle_perturbed(modes, I2, eps).coefficients[0]
    terms = oracle_cascade(modes, I2, d)
    s = sum(eps**k * t.coefficients[0] for k, t in enumerate(terms))
    r = oracle_residual_coefficient(1.7, m * m, n * n, eps, d)
    assert abs((u - s) - r) <= 1e-14 * max(abs(u), abs(s))


def test_box_frequencies_rescale():
    dom = BoxDomain((0, 0), (1, 2), 1)
    m = SineModeSet.single((1, 1), 1.0, dom)
    np.testing.assert_allclose(m.frequencies, [[math.pi, math.pi / 2]])
    assert m(np.array([0.5, 1.0])) == pytest.approx(1.0)
    # Parseval weight scales with (L/2)^N
    assert oracle_seminorm(m, "X1") == pytest.approx(math.sqrt(0.5 * 1.0 * math.pi**2))


def test_modes_from_expr_recovers_series():
    dom = BoxDomain.cube(2, 1)
    f = parse("sin(x1)*sin(x2) - 0.25*sin(2*x1)*sin(3*x2)", 2)
    m = modes_from_expr(f, dom, (16, 16))
    got = {tuple(i): c for i, c in zip(m.indices, m.coefficients)}
    assert set(got) == {(1, 1), (2, 3)}
    assert got[1, 1] == pytest.approx(1.0, abs=1e-12)
    assert got[2, 3] == pytest.approx(-0.25, abs=1e-12)


@pytest.mark.parametrize(
    "indices, coefs",
    [([[0, 1]], [1.0]), ([[1, 1], [1, 1]], [1.0, 2.0]), ([[1, 1]], [np.inf]), ([[1, 1, 1]], [1.0])],
)
def test_mode_set_validation(indices, coefs):
    with pytest.raises(ValueError):
        SineModeSet(np.array(indices), np.array(coefs), BoxDomain.cube(2, 1))


def test_symbols_need_positive_diagonal():
    with pytest.raises(ValueError):
        oracle_perturbed(SineModeSet.single((1, 1)), (1.0, 0.0), 0.5)
