"""Quadrilateral meshes: construction, boundary tagging, refinement, file IO.

All benchmark geometries are block-structured; curved boundaries (cylinder,
Fraenkel half-disc) are polygonal with node projection onto the exact circle
at every refinement level.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

__all__ = [
    "BCTag",
    "Mesh",
    "generate_rectangle",
    "generate_bfs",
    "generate_cylinder_channel",
    "generate_T_jet",
    "generate_fraenkel",
    "generate_square_vortex",
    "refine_uniform",
    "write_mesh",
    "read_mesh",
]


class BCTag(IntEnum):
    WALL = 0
    INFLOW = 1
    OUTFLOW = 2
    SYMMETRY = 3
    CHARACTERISTIC = 4


TAG_NAMES = {
    BCTag.WALL: "wall",
    BCTag.INFLOW: "in",
    BCTag.OUTFLOW: "out",
    BCTag.SYMMETRY: "sym",
    BCTag.CHARACTERISTIC: "char",
}
NAME_TAGS = {v: k for k, v in TAG_NAMES.items()}


@dataclass
class Mesh:
    """Immutable 2D quad mesh with tagged boundary edges.

    bedge_nodes are ordered along the owning cell's CCW traversal, so the
    outward normal is the edge tangent rotated by -90 degrees.
    """

    nodes: np.ndarray        # (N, 2)
    cells: np.ndarray        # (M, 4), CCW
    bedge_nodes: np.ndarray  # (K, 2)
    bedge_cell: np.ndarray   # (K,)
    bedge_tag: np.ndarray    # (K,)
    bedge_geom: np.ndarray   # (K,) -1 for straight, else circle index
    circles: list = field(default_factory=list)  # [(cx, cy, r)]
    d_K: np.ndarray = None   # (M,)

    def __post_init__(self):
        if self.d_K is None:
            self.d_K = cell_diameters(self.nodes, self.cells)

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_cells(self):
        return len(self.cells)

    def cell_areas(self):
        x = self.nodes[self.cells, 0]
        y = self.nodes[self.cells, 1]
        return 0.5 * np.abs(
            np.sum(x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y, axis=1)
        )

    def bedge_normals(self):
        """Unit outward normals of the straight boundary edges, (K, 2)."""
        t = self.nodes[self.bedge_nodes[:, 1]] - self.nodes[self.bedge_nodes[:, 0]]
        n = np.column_stack([t[:, 1], -t[:, 0]])
        return n / np.linalg.norm(n, axis=1)[:, None]

    def tags_present(self):
        return {BCTag(t) for t in np.unique(self.bedge_tag)}


def cell_diameters(nodes, cells):
    p = nodes[cells]  # (M, 4, 2)
    d = np.zeros(len(cells))
    for a in range(4):
        for b in range(a + 1, 4):
            d = np.maximum(d, np.linalg.norm(p[:, a] - p[:, b], axis=1))
    return d


def _orient_ccw(nodes, cells):
    x = nodes[cells, 0]
    y = nodes[cells, 1]
    area2 = np.sum(x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y, axis=1)
    flip = area2 < 0
    cells[flip] = cells[flip][:, ::-1]
    return cells


def _extract_boundary(cells):
    """Boundary edges in cell-traversal order: list of (n0, n1, cell)."""
    seen = {}
    for c, quad in enumerate(cells):
        for a in range(4):
            n0, n1 = quad[a], quad[(a + 1) % 4]
            key = (min(n0, n1), max(n0, n1))
            if key in seen:
                seen[key] = None
            else:
                seen[key] = (int(n0), int(n1), c)
    return [v for v in seen.values() if v is not None]


def _assemble_mesh(nodes, cells, tag_fn, circles=(), circle_tol=1e-9):
    nodes = np.ascontiguousarray(nodes, dtype=float)
    cells = _orient_ccw(nodes, np.ascontiguousarray(cells, dtype=np.int64))
    bed = _extract_boundary(cells)
    K = len(bed)
    bedge_nodes = np.array([[b[0], b[1]] for b in bed], dtype=np.int64)
    bedge_cell = np.array([b[2] for b in bed], dtype=np.int64)
    mids = 0.5 * (nodes[bedge_nodes[:, 0]] + nodes[bedge_nodes[:, 1]])
    bedge_tag = np.array([int(tag_fn(x, y)) for x, y in mids], dtype=np.int64)
    bedge_geom = np.full(K, -1, dtype=np.int64)
    for gi, (cx, cy, r) in enumerate(circles):
        d0 = np.abs(np.hypot(*(nodes[bedge_nodes[:, 0]] - [cx, cy]).T) - r)
        d1 = np.abs(np.hypot(*(nodes[bedge_nodes[:, 1]] - [cx, cy]).T) - r)
        on = (d0 < circle_tol * max(r, 1.0)) & (d1 < circle_tol * max(r, 1.0))
        bedge_geom[on] = gi
    return Mesh(nodes, cells, bedge_nodes, bedge_cell, bedge_tag, bedge_geom, list(circles))


class _Builder:
    """Accumulates structured blocks, merging coincident nodes."""

    def __init__(self, tol=1e-9):
        self.tol = tol
        self.nodes = []
        self.index = {}
        self.cells = []

    def node(self, x, y):
        key = (round(x / self.tol), round(y / self.tol))
        idx = self.index.get(key)
        if idx is None:
            idx = len(self.nodes)
            self.nodes.append((x, y))
            self.index[key] = idx
        return idx

    def add_grid(self, X, Y):
        """Structured block given node coordinate arrays of shape (ni+1, nj+1)."""
        ni, nj = X.shape[0] - 1, X.shape[1] - 1
        ids = np.empty((ni + 1, nj + 1), dtype=np.int64)
        for i in range(ni + 1):
            for j in range(nj + 1):
                ids[i, j] = self.node(X[i, j], Y[i, j])
        for i in range(ni):
            for j in range(nj):
                self.cells.append((ids[i, j], ids[i + 1, j], ids[i + 1, j + 1], ids[i, j + 1]))

    def add_tensor(self, xb, yb):
        X, Y = np.meshgrid(xb, yb, indexing="ij")
        self.add_grid(X, Y)

    def finish(self, tag_fn, circles=()):
        return _assemble_mesh(np.array(self.nodes), np.array(self.cells), tag_fn, circles)


def generate_rectangle(x0, x1, y0, y1, nx, ny, tags=None):
    """Structured nx-by-ny quad mesh of [x0,x1]x[y0,y1].

    tags: dict with keys left/right/bottom/top mapping to BCTag
    (default: all Wall).
    """
    if x1 <= x0 or y1 <= y0 or nx < 1 or ny < 1:
        raise ValueError("degenerate rectangle extents")
    tags = tags or {}
    sides = {
        "left": tags.get("left", BCTag.WALL),
        "right": tags.get("right", BCTag.WALL),
        "bottom": tags.get("bottom", BCTag.WALL),
        "top": tags.get("top", BCTag.WALL),
    }
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    nodes = np.array([(x, y) for y in ys for x in xs])
    cells = []
    for j in range(ny):
        for i in range(nx):
            a = j * (nx + 1) + i
            cells.append((a, a + 1, a + nx + 2, a + nx + 1))
    tolx = 1e-12 * max(abs(x0), abs(x1), 1)
    toly = 1e-12 * max(abs(y0), abs(y1), 1)

    def tag_fn(x, y):
        if abs(x - x0) < tolx:
            return sides["left"]
        if abs(x - x1) < tolx:
            return sides["right"]
        if abs(y - y0) < toly:
            return sides["bottom"]
        return sides["top"]

    return _assemble_mesh(nodes, np.array(cells), tag_fn)


def generate_bfs(step_height=0.5, inlet_height=0.5, upstream_len=1.0,
                 downstream_len=10.0, resolution=1):
    """Backward-facing step channel (L-shape), inflow at the upstream inlet."""
    H = step_height + inlet_height
    r = int(resolution)
    ny_in = 4 * r
    dy = inlet_height / ny_in
    ny_full = int(round(H / dy))
    nx_up = max(1, int(round(upstream_len / dy)))
    nx_dn = max(1, int(round(downstream_len / dy)))
    b = _Builder()
    b.add_tensor(np.linspace(-upstream_len, 0.0, nx_up + 1),
                 np.linspace(step_height, H, ny_in + 1))
    b.add_tensor(np.linspace(0.0, downstream_len, nx_dn + 1),
                 np.linspace(0.0, H, ny_full + 1))

    def tag_fn(x, y):
        if abs(x + upstream_len) < 1e-12:
            return BCTag.INFLOW
        if abs(x - downstream_len) < 1e-12 * max(downstream_len, 1):
            return BCTag.OUTFLOW
        return BCTag.WALL

    return b.finish(tag_fn)


def _ring_nodes(center, radius, perimeter_pts, n_layers, grading=1.4):
    """Node grid between a circle and a polyline of matched perimeter points.

    Returns (n_pts, n_layers+1, 2): layer 0 on the circle, last on the polyline.
    """
    c = np.asarray(center)
    P = np.asarray(perimeter_pts)
    d = P - c
    dist = np.linalg.norm(d, axis=1)
    u = d / dist[:, None]
    # geometric grading of the radial coordinate from the circle outwards
    t = np.array([(grading**j - 1.0) / (grading**n_layers - 1.0) for j in range(n_layers + 1)])
    nodes = np.empty((len(P), n_layers + 1, 2))
    for j, tj in enumerate(t):
        rr = radius + (dist - radius) * tj
        nodes[:, j, :] = c + u * rr[:, None]
    return nodes


def generate_cylinder_channel(length, resolution=0):
    """Schaefer-Turek channel with a circular hole.

    Channel [0, length] x [0, 0.41], cylinder of radius 0.05 at (0.2, 0.2);
    valid lengths contain the inner square [0.1, 0.3]^2.
    """
    if length < 0.35:
        raise ValueError("channel too short to contain the cylinder block")
    cx, cy, r = 0.2, 0.2, 0.05
    m = 4  # segments per side of the inner square
    xin = np.linspace(0.1, 0.3, m + 1)
    yin = np.linspace(0.1, 0.3, m + 1)
    # global x-breaks: inlet column, inner square columns, graded outlet columns
    nxr = max(2, int(round((length - 0.3) / 0.08)))
    nxr = min(nxr, 16)
    xr = 0.3 + (length - 0.3) * (np.linspace(0, 1, nxr + 1)) ** 1.15
    xbreaks = np.concatenate([[0.0, 0.05], xin, xr[1:]])
    ybreaks = np.concatenate([[0.0, 0.05], yin, [0.355, 0.41]])

    b = _Builder()
    # tensor background, skipping the inner-square cells (replaced by the ring)
    for i in range(len(xbreaks) - 1):
        for j in range(len(ybreaks) - 1):
            xm = 0.5 * (xbreaks[i] + xbreaks[i + 1])
            ym = 0.5 * (ybreaks[j] + ybreaks[j + 1])
            if 0.1 < xm < 0.3 and 0.1 < ym < 0.3:
                continue
            b.add_tensor(xbreaks[i:i + 2], ybreaks[j:j + 2])
    # ring block: perimeter of the inner square, CCW from (0.3, 0.1)
    per = []
    for y in yin[:-1]:
        per.append((0.3, y))
    for x in xin[::-1][:-1]:
        per.append((x, 0.3))
    for y in yin[::-1][:-1]:
        per.append((0.1, y))
    for x in xin[:-1]:
        per.append((x, 0.1))
    per = np.array(per)
    per_closed = np.vstack([per, per[:1]])
    ring = _ring_nodes((cx, cy), r, per_closed, n_layers=2)
    for k in range(len(per)):
        b.add_grid(np.array([ring[k, :, 0], ring[k + 1, :, 0]]),
                   np.array([ring[k, :, 1], ring[k + 1, :, 1]]))

    def tag_fn(x, y):
        if abs(x) < 1e-12:
            return BCTag.INFLOW
        if abs(x - length) < 1e-12 * max(length, 1):
            return BCTag.OUTFLOW
        return BCTag.WALL

    mesh = b.finish(tag_fn, circles=[(cx, cy, r)])
    # snap the circle nodes exactly onto the circle
    mesh = _project_circles(mesh)
    for _ in range(int(resolution)):
        mesh = refine_uniform(mesh)
    return mesh


def _project_circles(mesh):
    nodes = mesh.nodes.copy()
    for gi, (cx, cy, r) in enumerate(mesh.circles):
        ids = np.unique(mesh.bedge_nodes[mesh.bedge_geom == gi])
        d = nodes[ids] - [cx, cy]
        dist = np.linalg.norm(d, axis=1)
        nodes[ids] = [cx, cy] + d / dist[:, None] * r
    return Mesh(nodes, mesh.cells, mesh.bedge_nodes, mesh.bedge_cell,
                mesh.bedge_tag, mesh.bedge_geom, mesh.circles)


def generate_T_jet(scale=1.0, level=0, characteristic=False):
    """Jet impact domain: the unit-scale square ]0,2[^2.

    Inflow {0} x ]1,2[, outflow ]1,2[ x {0} and ]1,2[ x {2}, walls elsewhere.
    With characteristic=True the inflow/outflow faces carry the
    characteristic tag instead (scaling-invariance experiment).
    The mesh for any scale is the unit-scale mesh with nodes multiplied by
    scale, so scaled meshes are exactly similar.
    """
    n = 16 * 2 ** int(level)
    io_in, io_out = (BCTag.CHARACTERISTIC, BCTag.CHARACTERISTIC) if characteristic \
        else (BCTag.INFLOW, BCTag.OUTFLOW)

    def tag_fn(x, y):
        if abs(x) < 1e-12 and y > 1.0:
            return io_in
        if x > 1.0 and (abs(y) < 1e-12 or abs(y - 2.0) < 1e-12):
            return io_out
        return BCTag.WALL

    xs = np.linspace(0.0, 2.0, n + 1)
    nodes = np.array([(x, y) for y in xs for x in xs])
    cells = []
    for j in range(n):
        for i in range(n):
            a = j * (n + 1) + i
            cells.append((a, a + 1, a + n + 2, a + n + 1))
    mesh = _assemble_mesh(nodes, np.array(cells), tag_fn)
    if scale != 1.0:
        mesh = Mesh(mesh.nodes * scale, mesh.cells, mesh.bedge_nodes,
                    mesh.bedge_cell, mesh.bedge_tag, mesh.bedge_geom, [])
    return mesh


def generate_square_vortex(resolution=0):
    """Standing-vortex domain ]-1,1[^2, all-wall boundary.

    Resolution k is the paper's mesh(k+1): an (8*2^k)^2 quad grid, i.e. the
    row index N = 4 * cell count in {256, 1024, 4096, 16384}.
    """
    n = 8 * 2 ** int(resolution)
    return generate_rectangle(-1.0, 1.0, -1.0, 1.0, n, n)


def generate_fraenkel(resolution=0, full=False):
    """Rotational-flow domain ]-3,3[x]0,3[ minus the unit half-disc.

    full=True reflects through y=0 (flow around the whole cylinder).
    Inflow x=-3, outflow x=3, walls elsewhere (half-circle projected exactly).
    """
    m = 2  # segments per short side of the half-square around the disc
    b = _Builder()
    # half-ring between unit circle and half-square [-1.5,1.5]x[0,1.5]
    per = []
    for y in np.linspace(0.0, 1.5, m + 1)[:-1]:
        per.append((1.5, y))
    for x in np.linspace(1.5, -1.5, 2 * m + 1)[:-1]:
        per.append((x, 1.5))
    for y in np.linspace(1.5, 0.0, m + 1):
        per.append((-1.5, y))
    ring = _ring_nodes((0.0, 0.0), 1.0, np.array(per), n_layers=2, grading=1.3)
    # the first/last perimeter rays are horizontal: pin their circle feet to y=0
    ring[0, 0] = (1.0, 0.0)
    ring[-1, 0] = (-1.0, 0.0)
    for k in range(len(per) - 1):
        b.add_grid(np.array([ring[k, :, 0], ring[k + 1, :, 0]]),
                   np.array([ring[k, :, 1], ring[k + 1, :, 1]]))
    b.add_tensor(np.linspace(-3.0, -1.5, 2 + 1), np.linspace(0.0, 1.5, m + 1))
    b.add_tensor(np.linspace(1.5, 3.0, 2 + 1), np.linspace(0.0, 1.5, m + 1))
    xtop = np.concatenate([np.linspace(-3.0, -1.5, 3)[:-1],
                           np.linspace(-1.5, 1.5, 2 * m + 1),
                           np.linspace(1.5, 3.0, 3)[1:]])
    b.add_tensor(xtop, np.linspace(1.5, 3.0, m + 1))

    if full:
        ncur = len(b.cells)
        nodes = np.array(b.nodes)
        cells = list(b.cells)
        b2 = _Builder()
        for quad in cells:
            pts = [(nodes[q][0], -nodes[q][1]) for q in quad]
            b2.cells.append(tuple(b2.node(*p) for p in pts))
        for quad in cells:
            pts = [tuple(nodes[q]) for q in quad]
            b2.cells.append(tuple(b2.node(*p) for p in pts))
        b = b2

    ylim = 3.0

    def tag_fn(x, y):
        if abs(x + 3.0) < 1e-12:
            return BCTag.INFLOW
        if abs(x - 3.0) < 1e-12:
            return BCTag.OUTFLOW
        return BCTag.WALL

    mesh = b.finish(tag_fn, circles=[(0.0, 0.0, 1.0)])
    mesh = _project_circles(mesh)
    for _ in range(int(resolution)):
        mesh = refine_uniform(mesh)
    return mesh


def refine_uniform(mesh: Mesh) -> Mesh:
    """Split every quad into 4; boundary tags inherited, circle nodes projected."""
    nodes = list(map(tuple, mesh.nodes))
    edge_mid = {}

    def midpoint(a, b):
        key = (min(a, b), max(a, b))
        idx = edge_mid.get(key)
        if idx is None:
            idx = len(nodes)
            xa, ya = nodes[a]
            xb, yb = nodes[b]
            nodes.append((0.5 * (xa + xb), 0.5 * (ya + yb)))
            edge_mid[key] = idx
        return idx

    new_cells = []
    for quad in mesh.cells:
        n0, n1, n2, n3 = (int(q) for q in quad)
        m01 = midpoint(n0, n1)
        m12 = midpoint(n1, n2)
        m23 = midpoint(n2, n3)
        m30 = midpoint(n3, n0)
        cidx = len(nodes)
        x = [nodes[n0], nodes[n1], nodes[n2], nodes[n3]]
        nodes.append((sum(p[0] for p in x) / 4.0, sum(p[1] for p in x) / 4.0))
        new_cells.extend([
            (n0, m01, cidx, m30),
            (m01, n1, m12, cidx),
            (cidx, m12, n2, m23),
            (m30, cidx, m23, n3),
        ])

    nodes = np.array(nodes)
    # project midpoints of curved boundary edges onto their circle
    parent = {}
    for k in range(len(mesh.bedge_nodes)):
        a, b = (int(x) for x in mesh.bedge_nodes[k])
        parent[(min(a, b), max(a, b))] = k
        gi = mesh.bedge_geom[k]
        if gi >= 0:
            cx, cy, r = mesh.circles[gi]
            mid = edge_mid[(min(a, b), max(a, b))]
            d = nodes[mid] - [cx, cy]
            nodes[mid] = np.array([cx, cy]) + d / np.hypot(*d) * r

    # parent map: midpoint node -> parent bedge index
    mid_parent = {}
    for key, k in parent.items():
        if key in edge_mid:
            mid_parent[edge_mid[key]] = k
    node_parent = {}
    for k in range(len(mesh.bedge_nodes)):
        for nn in mesh.bedge_nodes[k]:
            node_parent.setdefault(int(nn), []).append(k)

    def tag_of(a, b):
        # one endpoint of every child boundary edge is a parent-edge midpoint
        for nn in (a, b):
            if nn in mid_parent:
                return mid_parent[nn]
        return None

    cells_arr = _orient_ccw(nodes, np.array(new_cells, dtype=np.int64))
    bed = _extract_boundary(cells_arr)
    bedge_nodes = np.array([[e[0], e[1]] for e in bed], dtype=np.int64)
    bedge_cell = np.array([e[2] for e in bed], dtype=np.int64)
    tags = np.empty(len(bed), dtype=np.int64)
    geom = np.empty(len(bed), dtype=np.int64)
    for i, (a, bnode, _) in enumerate(bed):
        k = tag_of(int(a), int(bnode))
        if k is None:
            # both endpoints are parent nodes: child edge of a parent edge that
            # connects its two original endpoints (cannot happen after split)
            cand = set(node_parent.get(int(a), [])) & set(node_parent.get(int(bnode), []))
            k = cand.pop()
        tags[i] = mesh.bedge_tag[k]
        geom[i] = mesh.bedge_geom[k]
    fine = Mesh(nodes, cells_arr, bedge_nodes, bedge_cell, tags, geom, list(mesh.circles))
    # parent maps for field prolongation: parent nodes keep their indices
    fine.refine_parent_nodes = mesh.n_nodes
    fine.refine_parent_cells = mesh.cells.copy()
    fine.refine_edge_mid = {mid: key for key, mid in edge_mid.items()}
    # centroid nodes were appended per cell in order, interleaved with midpoints;
    # recover them as the new nodes that are not edge midpoints
    fine.refine_centroids = {}
    mid_set = set(edge_mid.values())
    ci = 0
    for i in range(mesh.n_nodes, len(nodes)):
        if i not in mid_set:
            fine.refine_centroids[i] = ci
            ci += 1
    return fine


def prolongate(u_coarse, fine: Mesh):
    """Bilinear prolongation of a nodal field onto a refine_uniform child mesh."""
    if not hasattr(fine, "refine_parent_nodes"):
        raise ValueError("mesh was not produced by refine_uniform")
    nc = fine.refine_parent_nodes
    ncomp = len(u_coarse) // nc
    uc = u_coarse.reshape(nc, ncomp)
    uf = np.zeros((fine.n_nodes, ncomp))
    uf[:nc] = uc
    for mid, (a, b) in fine.refine_edge_mid.items():
        uf[mid] = 0.5 * (uc[a] + uc[b])
    for cnode, ci in fine.refine_centroids.items():
        quad = fine.refine_parent_cells[ci]
        uf[cnode] = 0.25 * (uc[quad[0]] + uc[quad[1]] + uc[quad[2]] + uc[quad[3]])
    return uf.ravel()


def write_mesh(mesh: Mesh, path):
    lines = ["mesh2d v1", f"nodes {mesh.n_nodes}"]
    for x, y in mesh.nodes:
        lines.append(f"{x:.17g} {y:.17g}")
    lines.append(f"cells {mesh.n_cells}")
    for c in mesh.cells:
        lines.append(f"{c[0]} {c[1]} {c[2]} {c[3]}")
    lines.append(f"bedges {len(mesh.bedge_nodes)}")
    for k in range(len(mesh.bedge_nodes)):
        a, b = mesh.bedge_nodes[k]
        lines.append(f"{a} {b} {TAG_NAMES[BCTag(int(mesh.bedge_tag[k]))]}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def read_mesh(path) -> Mesh:
    with open(path) as f:
        tokens = f.read().split("\n")
    it = iter(t for t in tokens if t.strip())
    header = next(it)
    if header.strip() != "mesh2d v1":
        raise ValueError(f"unsupported mesh header: {header!r}")
    kw, n = next(it).split()
    assert kw == "nodes"
    nodes = np.array([[float(v) for v in next(it).split()] for _ in range(int(n))])
    kw, m = next(it).split()
    assert kw == "cells"
    cells = np.array([[int(v) for v in next(it).split()] for _ in range(int(m))], dtype=np.int64)
    kw, k = next(it).split()
    assert kw == "bedges"
    tag_by_edge = {}
    for _ in range(int(k)):
        a, b, name = next(it).split()
        tag_by_edge[(min(int(a), int(b)), max(int(a), int(b)))] = NAME_TAGS[name]

    cells = _orient_ccw(nodes, cells)
    bed = _extract_boundary(cells)
    bedge_nodes = np.array([[e[0], e[1]] for e in bed], dtype=np.int64)
    bedge_cell = np.array([e[2] for e in bed], dtype=np.int64)
    tags = np.array(
        [int(tag_by_edge[(min(a, b), max(a, b))]) for a, b, _ in bed], dtype=np.int64
    )
    geom = np.full(len(bed), -1, dtype=np.int64)
    return Mesh(nodes, cells, bedge_nodes, bedge_cell, tags, geom, [])
