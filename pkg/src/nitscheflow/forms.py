"""Q1xQ1 discretization: form configuration, boundary data, and assembly.

The residual of the space-discrete problem is

    R_i = rho (D_t v_h, phi_i) + a_stab^NaSt(u_h)(psi_i) - l_stab^NaSt(u_h)(psi_i)

assembled from cell and boundary-edge kernels (numba by default, vectorized
numpy fallback).  The Jacobian is the directional derivative with the
non-smooth coefficient set {theta, |v_n|, v_n^+-, alpha, lambda_m, sqrt(.),
gamma_K} frozen at the linearization point (Picard-Newton).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from . import element
from .kernels import get_backend
from ._kernels_numpy import (
    MODE_ALTERNATIVE,
    MODE_BALANCED,
    MODE_STOKES,
    OUT_DO_NOTHING,
    OUT_ENERGY,
)
from .mesh import BCTag, Mesh

__all__ = [
    "FormConfig",
    "BoundaryData",
    "ConfigurationError",
    "Parts",
    "workspace",
    "assemble_residual",
    "assemble_jacobian",
    "assemble_euler_boundary",
    "assemble_viscous_nitsche",
    "assemble_stokes_coupling",
    "assemble_supg",
    "assemble_alternative",
    "split_field",
    "interpolate",
    "strong_constraints",
    "apply_strong_constraints",
]


class ConfigurationError(Exception):
    pass


@dataclass(frozen=True)
class FormConfig:
    rho: float = 1.0
    mu: float = 0.0
    c_dt: float = 0.1
    c_St: float = 4.0
    gamma: float = 100.0
    gamma1: float = 0.25
    gamma2: float = 0.1
    d_t: float = np.inf
    mode: str = "balanced"          # balanced | alternative | stokes
    outflow_mode: str = "energy"    # energy | do_nothing
    char_theta: str = "balanced"    # balanced | unit
    supg_second_derivatives: bool = False

    def __post_init__(self):
        if self.mu < 0 or self.gamma <= 0 or self.gamma1 <= 0 or self.gamma2 <= 0:
            raise ConfigurationError("nonpositive stabilization constant")
        if self.mode not in ("balanced", "alternative", "stokes"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.outflow_mode not in ("energy", "do_nothing"):
            raise ConfigurationError(f"unknown outflow mode {self.outflow_mode!r}")
        if self.char_theta not in ("balanced", "unit"):
            raise ConfigurationError(f"unknown char_theta {self.char_theta!r}")

    @property
    def mode_id(self):
        return {"balanced": MODE_BALANCED, "alternative": MODE_ALTERNATIVE,
                "stokes": MODE_STOKES}[self.mode]

    @property
    def outflow_id(self):
        return OUT_ENERGY if self.outflow_mode == "energy" else OUT_DO_NOTHING

    @property
    def dt_inv(self):
        return 0.0 if np.isinf(self.d_t) else 1.0 / self.d_t

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass
class BoundaryData:
    """Boundary data callables f(points (n,2), t) -> array.

    v_in on inflow edges, p_out on outflow edges, (v_char, p_char) on
    characteristic edges, f the body force.  Wall/symmetry need no data.
    """

    v_in: object = None
    p_out: object = None
    v_char: object = None
    p_char: object = None
    f: object = None

    @staticmethod
    def zero():
        return BoundaryData()

    def validate(self, mesh: Mesh):
        tags = mesh.tags_present()
        if BCTag.INFLOW in tags and self.v_in is None:
            raise ConfigurationError("inflow edges present but no v_in data")
        if BCTag.CHARACTERISTIC in tags and (self.v_char is None or self.p_char is None):
            raise ConfigurationError("characteristic edges present but no u_char data")
        # p_out defaults to zero on outflow; that is a legitimate datum


@dataclass(frozen=True)
class Parts:
    time: bool = True
    galerkin: bool = True
    viscous: bool = True
    boundary: bool = True
    supg: bool = True
    data: bool = True        # boundary data terms (v^D, p^D, u^D)
    body_force: bool = True  # f in l and l_stab

    @staticmethod
    def all():
        return Parts()

    @staticmethod
    def form_only():
        """a^NaSt semi-linear form only: no time, no SUPG, no data terms."""
        return Parts(time=False, supg=False, data=False, body_force=False)

    @staticmethod
    def supg_only():
        return Parts(time=False, galerkin=False, viscous=False, boundary=False,
                     data=False)


class FemWorkspace:
    """Precomputed geometry arrays for one mesh and quadrature pair."""

    def __init__(self, mesh: Mesh, qcell=3, qedge=4):
        self.mesh = mesh
        self.qcell, self.qedge = qcell, qedge
        nodes, cells = mesh.nodes, mesh.cells
        M = len(cells)
        pts, w = element.cell_rule(qcell)
        Q = len(w)
        self.N = element.shape(pts[:, 0], pts[:, 1])            # (Q,4)
        dN = element.shape_grad(pts[:, 0], pts[:, 1])           # (Q,4,2)
        corners = nodes[cells]                                   # (M,4,2)
        J = np.einsum("mai,qad->mqid", corners, dN)              # dx_i/dxi_d
        detJ = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
        invJ = np.empty_like(J)
        invJ[..., 0, 0] = J[..., 1, 1] / detJ
        invJ[..., 0, 1] = -J[..., 0, 1] / detJ
        invJ[..., 1, 0] = -J[..., 1, 0] / detJ
        invJ[..., 1, 1] = J[..., 0, 0] / detJ
        # invJ[d, j] = dxi_d/dx_j ; physical gradients dN/dx
        self.grads = np.einsum("qad,mqdj->mqaj", dN, invJ)       # (M,Q,4,2)
        self.wdet = w[None, :] * detJ                            # (M,Q)
        if np.any(detJ <= 0):
            raise ConfigurationError("singular or inverted cell map")
        self.xq = np.einsum("qa,mai->mqi", self.N, corners)      # (M,Q,2)
        c2 = element.shape_dxideta()                             # (4,)
        self.lap = 2.0 * c2[None, None, :] * (
            invJ[..., 0, 0] * invJ[..., 1, 0] + invJ[..., 0, 1] * invJ[..., 1, 1]
        )[:, :, None]                                            # (M,Q,4) affine approx
        self.dK = mesh.d_K
        self.cell_dofs = (3 * cells[:, :, None] + np.arange(3)[None, None, :]).reshape(M, 12)

        # boundary edges
        K = len(mesh.bedge_nodes)
        se, we = element.edge_rule(qedge)
        Qe = len(se)
        self.ecn = cells[mesh.bedge_cell]                        # (K,4)
        self.edofs = (3 * self.ecn[:, :, None] + np.arange(3)[None, None, :]).reshape(K, 12)
        self.etag = mesh.bedge_tag.astype(np.int64)
        self.edK = mesh.d_K[mesh.bedge_cell]
        self.eN = np.empty((K, Qe, 4))
        self.egrads = np.empty((K, Qe, 4, 2))
        self.ew = np.empty((K, Qe))
        self.en = np.empty((K, Qe, 2))
        self.ex = np.empty((K, Qe, 2))
        # local edge index within the owning cell
        for k in range(K):
            quad = cells[mesh.bedge_cell[k]]
            n0, n1 = mesh.bedge_nodes[k]
            loc = None
            for a in range(4):
                if quad[a] == n0 and quad[(a + 1) % 4] == n1:
                    loc = a
                    break
            if loc is None:
                raise ConfigurationError("boundary edge not aligned with owner cell")
            ref = element.edge_to_cell_coords(loc, se)           # (Qe,2)
            Nk = element.shape(ref[:, 0], ref[:, 1])             # (Qe,4)
            dNk = element.shape_grad(ref[:, 0], ref[:, 1])       # (Qe,4,2)
            ck = corners[mesh.bedge_cell[k]]                     # (4,2)
            Jk = np.einsum("ai,qad->qid", ck, dNk)
            detk = Jk[:, 0, 0] * Jk[:, 1, 1] - Jk[:, 0, 1] * Jk[:, 1, 0]
            invk = np.empty_like(Jk)
            invk[:, 0, 0] = Jk[:, 1, 1] / detk
            invk[:, 0, 1] = -Jk[:, 0, 1] / detk
            invk[:, 1, 0] = -Jk[:, 1, 0] / detk
            invk[:, 1, 1] = Jk[:, 0, 0] / detk
            self.eN[k] = Nk
            self.egrads[k] = np.einsum("qad,qdj->qaj", dNk, invk)
            p0, p1 = nodes[n0], nodes[n1]
            t = 0.5 * (p1 - p0)                                  # dx/ds, straight edge
            L = np.hypot(*t)
            self.ew[k] = we * L
            nrm = np.array([t[1], -t[0]]) / L
            self.en[k] = nrm
            self.ex[k] = element.shape(ref[:, 0], ref[:, 1]) @ ck

        self.n_dofs = 3 * mesh.n_nodes


_WS_CACHE = {}


def workspace(mesh: Mesh, qcell=3, qedge=4) -> FemWorkspace:
    key = (id(mesh), qcell, qedge)
    ws = _WS_CACHE.get(key)
    if ws is None or ws.mesh is not mesh:
        ws = FemWorkspace(mesh, qcell, qedge)
        _WS_CACHE[key] = ws
        if len(_WS_CACHE) > 32:
            _WS_CACHE.pop(next(iter(_WS_CACHE)))
    return ws


def split_field(u, mesh_or_n):
    n = mesh_or_n.n_nodes if hasattr(mesh_or_n, "n_nodes") else int(mesh_or_n)
    und = u.reshape(n, 3)
    return und[:, :2], und[:, 2]


def interpolate(mesh: Mesh, vfun=None, pfun=None, t=0.0):
    """Nodal interpolant of callables v(x, t) -> (n,2), p(x, t) -> (n,)."""
    u = np.zeros(3 * mesh.n_nodes)
    und = u.reshape(mesh.n_nodes, 3)
    if vfun is not None:
        und[:, :2] = vfun(mesh.nodes, t)
    if pfun is not None:
        und[:, 2] = pfun(mesh.nodes, t)
    return u


def _eval_edge_data(ws: FemWorkspace, data: BoundaryData, t):
    K, Qe = ws.ew.shape
    evD = np.zeros((K, Qe, 2))
    epD = np.zeros((K, Qe))
    if K == 0:
        return evD, epD
    pts = ws.ex.reshape(-1, 2)
    for tag, vfun, pfun in (
        (BCTag.INFLOW, data.v_in, None),
        (BCTag.OUTFLOW, None, data.p_out),
        (BCTag.CHARACTERISTIC, data.v_char, data.p_char),
    ):
        m = ws.etag == int(tag)
        if not m.any():
            continue
        if vfun is not None:
            evD[m] = np.asarray(vfun(ws.ex[m].reshape(-1, 2), t)).reshape(-1, Qe, 2)
        if pfun is not None:
            epD[m] = np.asarray(pfun(ws.ex[m].reshape(-1, 2), t)).reshape(-1, Qe)
    return evD, epD


def _eval_body_force(ws: FemWorkspace, data: BoundaryData, t):
    if data.f is None:
        return np.zeros_like(ws.xq)
    M, Q = ws.wdet.shape
    return np.asarray(data.f(ws.xq.reshape(-1, 2), t)).reshape(M, Q, 2)


def _bdf(cfg: FormConfig, history):
    """BDF coefficients (c0, (c_h,)) for D_t v = c0 v + sum_h c_h v_hist[h]."""
    if history is None or np.isinf(cfg.d_t):
        return 0.0, np.zeros((0,)), np.zeros((0, 1, 2))
    hv = np.stack([split_field(uh, len(uh) // 3)[0] for uh in history])
    if len(history) == 1:
        return 1.0 / cfg.d_t, np.array([-1.0 / cfg.d_t]), hv
    if len(history) == 2:
        return 1.5 / cfg.d_t, np.array([-2.0, 0.5]) / cfg.d_t, hv
    raise ConfigurationError("history must hold 1 (BE) or 2 (BDF2) states")


def _kernel_args(ws, cfg, u, ufro, history, data, t, parts: Parts):
    und = u.reshape(-1, 3)
    ufro_nd = (ufro if ufro is not None else u).reshape(-1, 3)
    bdf0, bdfh, hv = _bdf(cfg, history)
    fq = _eval_body_force(ws, data, t) if parts.body_force else np.zeros_like(ws.xq)
    has_f = parts.body_force and data.f is not None
    cell = (ws.mesh.cells, ws.N, ws.grads, ws.wdet, ws.lap, ws.dK,
            und, ufro_nd, hv, bdf0, bdfh, fq,
            cfg.rho, cfg.mu, cfg.c_dt, cfg.c_St, cfg.dt_inv, cfg.gamma1, cfg.gamma2,
            parts.time, parts.galerkin, parts.viscous, parts.supg, has_f,
            cfg.mode_id, cfg.supg_second_derivatives)
    evD, epD = _eval_edge_data(ws, data, t) if parts.data else (
        np.zeros((len(ws.etag), ws.ew.shape[1] if len(ws.etag) else 1, 2)),
        np.zeros((len(ws.etag), ws.ew.shape[1] if len(ws.etag) else 1)))
    edge = (ws.ecn, ws.eN, ws.egrads, ws.ew, ws.en, ws.edK, ws.etag,
            und, ufro_nd, evD, epD,
            cfg.rho, cfg.mu, cfg.c_dt, cfg.c_St, cfg.dt_inv, cfg.gamma,
            cfg.mode_id, cfg.outflow_id, cfg.char_theta == "unit",
            parts.boundary, parts.viscous, parts.data)
    return cell, edge


def assemble_residual(u, mesh, cfg, data, *, t=0.0, history=None, ufro=None,
                      parts: Parts = None, edge_mask=None):
    """Global residual vector (3N,).  ufro freezes the Picard coefficients."""
    parts = parts or Parts.all()
    data.validate(mesh)
    ws = workspace(mesh)
    kb = get_backend()
    cell_args, edge_args = _kernel_args(ws, cfg, u, ufro, history, data, t, parts)
    R = np.zeros(ws.n_dofs)
    if parts.galerkin or parts.viscous or parts.supg or parts.time:
        Rc = kb.cell_residual(*cell_args)
        R += np.bincount(ws.cell_dofs.ravel(), weights=Rc.reshape(-1, 12).ravel(),
                         minlength=ws.n_dofs)
    if (parts.boundary or parts.viscous) and len(ws.etag):
        Re = kb.edge_residual(*edge_args)
        if edge_mask is not None:
            Re = Re * edge_mask[:, None, None]
        R += np.bincount(ws.edofs.ravel(), weights=Re.reshape(-1, 12).ravel(),
                         minlength=ws.n_dofs)
    return R


def assemble_jacobian(u, mesh, cfg, data, *, t=0.0, history=None, parts: Parts = None):
    """Sparse Jacobian with non-smooth coefficients frozen at u."""
    parts = parts or Parts.all()
    data.validate(mesh)
    ws = workspace(mesh)
    kb = get_backend()
    cell_args, edge_args = _kernel_args(ws, cfg, u, None, history, data, t, parts)
    blocks = []
    if parts.galerkin or parts.viscous or parts.supg or parts.time:
        Jc = kb.cell_jacobian(*cell_args)
        rows = np.repeat(ws.cell_dofs, 12, axis=1).ravel()
        cols = np.tile(ws.cell_dofs, (1, 12)).ravel()
        blocks.append((Jc.ravel(), rows, cols))
    if (parts.boundary or parts.viscous) and len(ws.etag):
        Je = kb.edge_jacobian(*edge_args)
        rows = np.repeat(ws.edofs, 12, axis=1).ravel()
        cols = np.tile(ws.edofs, (1, 12)).ravel()
        blocks.append((Je.ravel(), rows, cols))
    vals = np.concatenate([b[0] for b in blocks])
    rows = np.concatenate([b[1] for b in blocks])
    cols = np.concatenate([b[2] for b in blocks])
    J = sp.coo_matrix((vals, (rows, cols)), shape=(ws.n_dofs, ws.n_dofs))
    return J.tocsr()


def assemble_euler_boundary(u, mesh, cfg, data, out, *, t=0.0, ufro=None, with_data=True):
    """Accumulate the inviscid boundary terms (a^Eu boundary - l^Eu boundary)."""
    parts = Parts(time=False, galerkin=False, viscous=False, boundary=True,
                  supg=False, data=with_data, body_force=False)
    out += assemble_residual(u, mesh, cfg, data, t=t, ufro=ufro, parts=parts)
    return out


def assemble_viscous_nitsche(u, mesh, cfg, data, out, *, t=0.0, ufro=None, with_data=True):
    """Accumulate mu*(a^visc - l^visc): interior gradient term + Nitsche edges."""
    if cfg.mu == 0.0:
        return out
    parts = Parts(time=False, galerkin=False, viscous=True, boundary=False,
                  supg=False, data=with_data, body_force=False)
    out += assemble_residual(u, mesh, cfg, data, t=t, ufro=ufro, parts=parts)
    return out


def assemble_stokes_coupling(u, mesh, cfg, data, out, *, t=0.0, with_data=True):
    """Accumulate the Stokes pressure coupling (validation mode)."""
    scfg = cfg.with_(mode="stokes")
    parts = Parts(time=False, galerkin=False, viscous=False, boundary=True,
                  supg=False, data=with_data, body_force=False)
    out += assemble_residual(u, mesh, scfg, data, t=t, parts=parts)
    # interior (chi div v - p div phi) belongs to a^St as well
    parts = Parts(time=False, galerkin=True, viscous=False, boundary=False,
                  supg=False, data=False, body_force=False)
    out += assemble_residual(u, mesh, scfg, data, t=t, parts=parts)
    return out


def assemble_supg(u, history, cfg, mesh, data, out, *, t=0.0, ufro=None):
    """Accumulate a_stab(u)(psi_i) - l_stab(u)(psi_i).

    history feeds the discrete BDF derivative inside E(u); the mass term
    itself is not added here.
    """
    parts = Parts(time=False, galerkin=False, viscous=False, boundary=False,
                  supg=True, data=False, body_force=data.f is not None)
    out += assemble_residual(u, mesh, cfg, data, t=t, history=history,
                             ufro=ufro, parts=parts)
    return out


def assemble_alternative(u, mesh, cfg, data, *, t=0.0, history=None, ufro=None):
    """Residual of the strong-normal-velocity variant (before row constraints)."""
    acfg = cfg.with_(mode="alternative", char_theta="unit")
    return assemble_residual(u, mesh, acfg, data, t=t, history=history, ufro=ufro)


# --- strong constraints for the alternative discretization -----------------


def strong_constraints(mesh: Mesh, data: BoundaryData, t=0.0):
    """Node constraints for the alternative mode.

    Returns (normal_nodes, normals, full_nodes, full_values): nodes on
    wall/symmetry boundaries carry v.n = 0 (corner nodes with two distinct
    normals are fully constrained), inflow nodes carry v = v^D.
    """
    nrm = {}
    full = {}
    normals = mesh.bedge_normals()
    for k in range(len(mesh.bedge_nodes)):
        tag = BCTag(int(mesh.bedge_tag[k]))
        if tag in (BCTag.WALL, BCTag.SYMMETRY):
            for nn in mesh.bedge_nodes[k]:
                nn = int(nn)
                if nn in nrm:
                    if abs(np.dot(nrm[nn], normals[k])) < 1.0 - 1e-8:
                        full.setdefault(nn, np.zeros(2))
                else:
                    nrm[nn] = normals[k]
        elif tag == BCTag.INFLOW:
            for nn in mesh.bedge_nodes[k]:
                full[int(nn)] = None  # filled from data below
    if full and any(v is None for v in full.values()):
        ids = [n for n, v in full.items() if v is None]
        if data.v_in is None:
            raise ConfigurationError("inflow edges present but no v_in data")
        vals = np.asarray(data.v_in(mesh.nodes[ids], t))
        for i, n in enumerate(ids):
            full[n] = vals[i]
    normal_nodes = np.array([n for n in sorted(nrm) if n not in full], dtype=np.int64)
    nvecs = np.array([nrm[n] for n in normal_nodes]).reshape(-1, 2)
    full_nodes = np.array(sorted(full), dtype=np.int64)
    fvals = np.array([full[n] for n in full_nodes]).reshape(-1, 2)
    return normal_nodes, nvecs, full_nodes, fvals


def apply_strong_constraints(R, J, u, constraints):
    """Rotate wall rows to (tangential momentum, v.n=0) and set Dirichlet rows.

    J may be None (residual-only transform).  Returns (R, J).
    """
    normal_nodes, nvecs, full_nodes, fvals = constraints
    n_dofs = len(R)
    und = u.reshape(-1, 3)

    rows_i = []
    rows_j = []
    vals = []
    kill = np.ones(n_dofs)
    for k, node in enumerate(normal_nodes):
        i1, i2 = 3 * node, 3 * node + 1
        n1, n2 = nvecs[k]
        t1, t2 = -n2, n1
        # tangential row combination goes to slot i1
        rows_i += [i1, i1]
        rows_j += [i1, i2]
        vals += [t1, t2]
        kill[i2] = 0.0
    for node in full_nodes:
        kill[3 * node] = 0.0
        kill[3 * node + 1] = 0.0

    T = sp.coo_matrix((vals, (rows_i, rows_j)), shape=(n_dofs, n_dofs)).tocsr()
    keep = sp.diags(kill)
    sel = np.ones(n_dofs)
    sel[[3 * n for n in normal_nodes]] = 0.0  # slot i1 replaced by T row
    base = sp.diags(sel)

    Rt = (base @ R + T @ R) * kill
    Jt = None
    if J is not None:
        Jt = keep @ (base @ J + T @ J)
    # constraint rows
    crow_i, crow_j, cvals = [], [], []
    for k, node in enumerate(normal_nodes):
        i2 = 3 * node + 1
        Rt[i2] = und[node, :2] @ nvecs[k]
        crow_i += [i2, i2]
        crow_j += [3 * node, 3 * node + 1]
        cvals += [nvecs[k][0], nvecs[k][1]]
    for k, node in enumerate(full_nodes):
        for c in range(2):
            i = 3 * node + c
            Rt[i] = und[node, c] - fvals[k, c]
            crow_i.append(i)
            crow_j.append(i)
            cvals.append(1.0)
    if Jt is not None and crow_i:
        C = sp.coo_matrix((cvals, (crow_i, crow_j)), shape=(n_dofs, n_dofs))
        Jt = (Jt + C).tocsr()
    return Rt, Jt
