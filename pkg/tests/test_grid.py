import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anisoexp.grid import BoxDomain, build_grid, slice_nodes


def test_square_counts():
    g = build_grid(BoxDomain.cube(2, 1), (4, 4))
    assert g.n_interior == 9
    np.testing.assert_allclose(g.spacing, [math.pi / 4, math.pi / 4])


def test_rectangle_counts():
    g = build_grid(BoxDomain((0, 0), (1, 2), 1), (2, 4))
    assert g.n_interior == 3
    np.testing.assert_allclose(g.spacing, [0.5, 0.5])


def test_too_few_cells():
    with pytest.raises(ValueError):
        build_grid(BoxDomain.cube(2, 1), (1, 4))


@pytest.mark.parametrize(
    "lower, upper, split",
    [((0, 0), (1, 0), 1), ((0, 0), (1, 1), 0), ((0, 0), (1, 1), 2), ((0,), (1,), 1), ((0, 0), (1, 1, 1), 1)],
)
def test_bad_domains(lower, upper, split):
    with pytest.raises(ValueError):
        BoxDomain(lower, upper, split)


def test_node_coordinates():
    g = build_grid(BoxDomain((1, -1), (2, 1), 1), (4, 2))
    pts = g.node_coordinates(interior=False)
    assert pts.shape == (5, 3, 2)
    np.testing.assert_allclose(pts[3, 1], [1.75, 0.0])
    assert g.node_coordinates().shape == (3, 1, 2)


def test_slice_2d():
    g = build_grid(BoxDomain.cube(2, 1), (4, 4))
    idx = slice_nodes(g, 1)
    np.testing.assert_array_equal(idx, [0, 1, 2])
    pts = g.node_coordinates().reshape(-1, 2)[idx]
    assert np.all(pts[:, 0] == pts[0, 0])
    assert np.all(np.diff(pts[:, 1]) > 0)


def test_slice_3d():
    g = build_grid(BoxDomain.cube(3, 1), (4, 4, 4))
    assert len(slice_nodes(g, 2)) == 9


def test_slice_3d_two_x1_axes():
    g = build_grid(BoxDomain.cube(3, 2), (4, 5, 6))
    idx = slice_nodes(g, (2, 3))
    assert len(idx) == 5
    assert all(g.multi_index(int(i))[:2] == (2, 3) for i in idx)


@pytest.mark.parametrize("bad", [0, 4, (1, 1)])
def test_slice_boundary_rejected(bad):
    g = build_grid(BoxDomain.cube(2, 1), (4, 4))
    with pytest.raises(IndexError):
        slice_nodes(g, bad)


@given(st.lists(st.integers(2, 6), min_size=2, max_size=3), st.data())
def test_index_bijection(ns, data):
    split = data.draw(st.integers(1, len(ns) - 1))
    g = build_grid(BoxDomain.cube(len(ns), split), ns)
    seen = {g.multi_index(k) for k in range(g.n_interior)}
    assert len(seen) == g.n_interior
    for k in range(g.n_interior):
        assert g.global_index(g.multi_index(k)) == k


def test_global_index_bounds():
    g = build_grid(BoxDomain.cube(2, 1), (4, 4))
    with pytest.raises(IndexError):
        g.global_index((0, 1))
    with pytest.raises(IndexError):
        g.multi_index(9)
