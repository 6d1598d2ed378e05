"""Q1 reference element on [-1,1]^2 and Gauss quadrature rules."""

from __future__ import annotations

import numpy as np

# reference corner order, counter-clockwise, matching cell node order
CORNERS = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])

# local edges of a quad (node pairs in cell-local numbering)
LOCAL_EDGES = ((0, 1), (1, 2), (2, 3), (3, 0))


def shape(xi, eta):
    """Bilinear basis values at reference point(s); returns (..., 4)."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    return 0.25 * np.stack(
        [(1 + cx * xi) * (1 + cy * eta) for cx, cy in CORNERS], axis=-1
    )


def shape_grad(xi, eta):
    """Reference gradients dN/d(xi,eta); returns (..., 4, 2)."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    g = np.empty(np.broadcast(xi, eta).shape + (4, 2))
    for a, (cx, cy) in enumerate(CORNERS):
        g[..., a, 0] = 0.25 * cx * (1 + cy * eta)
        g[..., a, 1] = 0.25 * cy * (1 + cx * xi)
    return g


def shape_dxideta():
    """Mixed second reference derivative d2N/(dxi deta), constant per basis fn."""
    return 0.25 * CORNERS[:, 0] * CORNERS[:, 1]


def gauss_1d(npts):
    """Gauss-Legendre points/weights on [-1,1] (exact for degree 2*npts-1)."""
    return np.polynomial.legendre.leggauss(npts)


def cell_rule(order=3):
    """Tensor Gauss rule on [-1,1]^2; order is points per direction (2 or 3).

    Returns (points (Q,2), weights (Q,)).
    """
    if order not in (2, 3, 4):
        raise ValueError("cell rule supports 2..4 points per direction")
    x, w = gauss_1d(order)
    pts = np.array([[xi, eta] for eta in x for xi in x])
    wts = np.array([wi * wj for wj in w for wi in w])
    return pts, wts


def edge_rule(npts=4):
    """Gauss rule on the reference edge [-1,1]; npts in {3,4}."""
    if npts not in (2, 3, 4, 5):
        raise ValueError("edge rule supports 2..5 points")
    return gauss_1d(npts)


def edge_to_cell_coords(local_edge, s):
    """Map edge parameter s in [-1,1] to cell reference coords along a local edge."""
    a, b = LOCAL_EDGES[local_edge]
    pa, pb = CORNERS[a], CORNERS[b]
    s = np.asarray(s, dtype=float)[..., None]
    return 0.5 * (1 - s) * pa + 0.5 * (1 + s) * pb
