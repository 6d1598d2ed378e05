"""Q1 reference element and quadrature exactness."""

import numpy as np
import pytest

from nitscheflow.element import (
    CORNERS,
    cell_rule,
    edge_rule,
    edge_to_cell_coords,
    shape,
    shape_grad,
)

RNG = np.random.default_rng(7)


def test_partition_of_unity_and_delta():
    pts = RNG.uniform(-1, 1, (20, 2))
    N = shape(pts[:, 0], pts[:, 1])
    np.testing.assert_allclose(N.sum(axis=-1), 1.0, rtol=1e-14)
    Nc = shape(CORNERS[:, 0], CORNERS[:, 1])
    np.testing.assert_allclose(Nc, np.eye(4), atol=1e-15)


def test_gradient_reproduces_linear_field_on_affine_cell():
    # parallelogram cell: map is affine, gradients of a linear field exact
    p0 = np.array([0.3, 0.1])
    e1 = np.array([0.5, 0.1])
    e2 = np.array([-0.1, 0.4])
    corners = np.array([p0, p0 + e1, p0 + e1 + e2, p0 + e2])
    coef = np.array([2.0, -1.5])
    vals = corners @ coef + 0.7
    pts = RNG.uniform(-1, 1, (10, 2))
    dN = shape_grad(pts[:, 0], pts[:, 1])  # (10, 4, 2)
    for q in range(10):
        J = corners.T @ dN[q]  # dx/dxi (2,2)
        grad_phys = dN[q] @ np.linalg.inv(J)  # (4,2)
        g = vals @ grad_phys
        np.testing.assert_allclose(g, coef, rtol=1e-12)


def test_cell_rule_exactness():
    pts, w = cell_rule(2)
    val = np.sum(w * pts[:, 0] ** 2 * pts[:, 1] ** 2)
    assert val == pytest.approx(4.0 / 9.0, rel=1e-14)  # (2/3)^2
    pts, w = cell_rule(3)
    val = np.sum(w * pts[:, 0] ** 4 * pts[:, 1] ** 4)
    assert val == pytest.approx((2.0 / 5.0) ** 2, rel=1e-13)
    with pytest.raises(ValueError):
        cell_rule(7)


def test_edge_rule_degree():
    x, w = edge_rule(3)
    assert np.sum(w * x**5) == pytest.approx(0.0, abs=1e-14)
    assert np.sum(w * x**4) == pytest.approx(2.0 / 5.0, rel=1e-13)
    x, w = edge_rule(4)
    assert np.sum(w * x**6) == pytest.approx(2.0 / 7.0, rel=1e-13)


def test_cell_area_by_quadrature():
    corners = np.array([[0.0, 0.0], [2.0, 0.1], [2.3, 1.2], [-0.2, 1.0]])
    pts, w = cell_rule(3)
    dN = shape_grad(pts[:, 0], pts[:, 1])
    area = 0.0
    for q in range(len(w)):
        J = corners.T @ dN[q]
        area += w[q] * np.linalg.det(J)
    x, y = corners[:, 0], corners[:, 1]
    shoelace = 0.5 * abs(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
    assert area == pytest.approx(shoelace, rel=1e-13)


def test_edge_to_cell_coords():
    s = np.array([-1.0, 0.0, 1.0])
    pts = edge_to_cell_coords(0, s)  # bottom edge eta=-1
    np.testing.assert_allclose(pts[:, 1], -1.0)
    np.testing.assert_allclose(pts[:, 0], s)
    pts = edge_to_cell_coords(1, s)  # right edge xi=1
    np.testing.assert_allclose(pts[:, 0], 1.0)
