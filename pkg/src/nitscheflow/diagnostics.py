"""Scalar functionals: kinetic energy, dissipation split, momentum balance,
drag, exact-solution error norms and convergence orders."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .forms import Parts, assemble_residual, split_field, workspace
from .mesh import BCTag, Mesh
from ._kernels_numpy import _theta

__all__ = [
    "EnergyReport",
    "kinetic_energy",
    "boundary_energy_form",
    "dissipation_split",
    "energy_balance_defect",
    "momentum_balance",
    "boundary_momentum_flux",
    "drag_coefficient",
    "exact_errors",
    "convergence_orders",
]


@dataclass
class EnergyReport:
    t: float
    kinetic: float
    boundary_dissipation: float
    stabilization_dissipation: float


def kinetic_energy(u, mesh: Mesh, rho) -> float:
    """(rho/2) int |v_h|^2 by cell quadrature."""
    ws = workspace(mesh)
    v, _ = split_field(u, mesh)
    vq = np.einsum("qa,mac->mqc", ws.N, v[mesh.cells])
    return 0.5 * rho * float(np.sum(ws.wdet * np.einsum("mqc,mqc->mq", vq, vq)))


def _edge_state(ws, u):
    und = u.reshape(-1, 3)
    v_loc = und[ws.ecn][:, :, :2]
    p_loc = und[ws.ecn][:, :, 2]
    v = np.einsum("kqa,kac->kqc", ws.eN, v_loc)
    p = np.einsum("kqa,ka->kq", ws.eN, p_loc)
    gradv = np.einsum("kqad,kac->kqcd", ws.egrads, v_loc)
    return v, p, gradv


def boundary_energy_form(u, mesh: Mesh, cfg) -> dict:
    """Per-tag boundary terms of the coercivity identity at psi = u.

    For mu=0 this is exactly the 'Energy estimate for a^Eu' expression; for
    mu>0 the outflow part uses the exact regrouping
    rho/2 |v_n||v|^2 + (1/theta)[rho v_n^- v_n p + (p - mu dnv.n)^2].
    Valid in energy outflow mode.
    """
    ws = workspace(mesh)
    out = {"char": 0.0, "wall_sym_in": 0.0, "out": 0.0,
           "visc_interior": 0.0, "visc_wall_in": 0.0, "visc_sym": 0.0}
    rho, mu = cfg.rho, cfg.mu
    v, p, gradv = _edge_state(ws, u)
    vn = np.einsum("kqc,kqc->kq", v, ws.en)
    vmag = np.hypot(v[:, :, 0], v[:, :, 1])
    th = _theta(rho, vmag, mu, ws.edK[:, None], cfg.dt_inv, cfg.c_dt, cfg.c_St)
    dnvn = np.einsum("kqcd,kqd,kqc->kq", gradv, ws.en, ws.en)
    v2 = np.einsum("kqc,kqc->kq", v, v)
    s = np.sqrt(4.0 * th**2 + (rho * vn) ** 2)
    big = 0.5 * (np.abs(rho * vn) + s)
    alpha = (4.0 * th**2 / (rho * np.abs(vn) + s)) ** 2 / (4.0 * s)
    vn_minus = np.minimum(vn, 0.0)

    tag = ws.etag
    m = (tag == BCTag.WALL) | (tag == BCTag.SYMMETRY) | (tag == BCTag.INFLOW)
    if m.any():
        # (1/2)|A_n(psi)|_Theta (v,0).(v,0) = rho/2 |v_n||v|^2 + alpha v_n^2
        out["wall_sym_in"] = float(np.sum(
            ws.ew[m] * (0.5 * rho * np.abs(vn[m]) * v2[m] + alpha[m] * vn[m] ** 2)))
    m = tag == BCTag.OUTFLOW
    if m.any():
        pm = p[m] - mu * dnvn[m]
        out["out"] = float(np.sum(ws.ew[m] * (
            0.5 * rho * np.abs(vn[m]) * v2[m]
            + (rho * vn_minus[m] * vn[m] * p[m] + pm**2) / th[m])))
    m = tag == BCTag.CHARACTERISTIC
    if m.any():
        if cfg.char_theta == "unit":
            thc = np.ones_like(th[m])
        else:
            thc = th[m]
        sc = np.sqrt(4.0 * thc**2 + (rho * vn[m]) ** 2)
        vt2 = v2[m] - vn[m] ** 2
        val = rho * np.abs(vn[m]) * vt2 + (
            p[m] ** 2 + 2.0 * thc**2 * vn[m] ** 2 + (p[m] + rho * vn[m] * vn[m]) ** 2
        ) / sc
        out["char"] = float(np.sum(ws.ew[m] * 0.5 * val))

    if mu > 0.0:
        und = u.reshape(-1, 3)
        gv = np.einsum("mqad,mac->mqcd", ws.grads, und[mesh.cells][:, :, :2])
        out["visc_interior"] = float(mu * np.sum(ws.wdet * np.einsum("mqcd,mqcd->mq", gv, gv)))
        dnv = np.einsum("kqcd,kqd->kqc", gradv, ws.en)
        m = (tag == BCTag.WALL) | (tag == BCTag.INFLOW)
        if m.any():
            out["visc_wall_in"] = float(mu * np.sum(ws.ew[m] * (
                cfg.gamma / ws.edK[m][:, None] * v2[m]
                - 2.0 * np.einsum("kqc,kqc->kq", v[m], dnv[m]))))
        m = tag == BCTag.SYMMETRY
        if m.any():
            out["visc_sym"] = float(mu * np.sum(ws.ew[m] * (
                cfg.gamma / ws.edK[m][:, None] * vn[m] ** 2 - 2.0 * vn[m] * dnvn[m])))
    out["total"] = sum(out.values())
    return out


def _stab_dissipation(u, history, cfg, mesh, data, t=0.0):
    from .forms import assemble_supg
    R = np.zeros_like(u)
    assemble_supg(u, history, cfg, mesh, data, R, t=t)
    return float(u @ R)


def dissipation_split(u, history, cfg, mesh, data, t=0.0) -> EnergyReport:
    """Boundary and stabilization parts of the instantaneous dissipation."""
    bform = boundary_energy_form(u, mesh, cfg)
    boundary = bform["total"] - bform["visc_interior"]
    stab = _stab_dissipation(u, history, cfg, mesh, data, t=t)
    return EnergyReport(
        t=t,
        kinetic=kinetic_energy(u, mesh, cfg.rho),
        boundary_dissipation=boundary,
        stabilization_dissipation=stab,
    )


def energy_balance_defect(u_new, u_old, cfg, mesh, data, t=0.0):
    """Defect of the BE energy identity, normalized by the current energy scale.

    (KE1 - KE0)/d_t + (rho/2)||v1-v0||^2/d_t + a_stab^NaSt(u1)(u1) - l(u1) = defect
    where the middle terms are evaluated by the same assembly as the solver.
    """
    ke1 = kinetic_energy(u_new, mesh, cfg.rho)
    ke0 = kinetic_energy(u_old, mesh, cfg.rho)
    R = assemble_residual(u_new, mesh, cfg, data, t=t, history=[u_old])
    # u . R = rho(D_t v, v1) + a_stab^NaSt(u1)(u1) - l_stab^NaSt(u1)(u1)
    # and rho(D_t v, v1) = (KE1 - KE0)/d_t + rho/(2 d_t)||v1 - v0||^2
    return float(u_new @ R), ke1 - ke0


def _edge_qh_minus_eps(u, mesh, cfg, data, t=0.0, frozen_u=None):
    """q_h = q - eps_h at the boundary quadrature points, (K, Qe, 2).

    q = (mu grad v - p I - rho v x v) n; eps_h per boundary type (the
    consistent Nitsche flux corrections).
    """
    ws = workspace(mesh)
    rho, mu, gamma = cfg.rho, cfg.mu, cfg.gamma
    v, p, gradv = _edge_state(ws, u)
    vf, _, _ = _edge_state(ws, frozen_u if frozen_u is not None else u)
    vn = np.einsum("kqc,kqc->kq", v, ws.en)
    vnf = np.einsum("kqc,kqc->kq", vf, ws.en)
    vmagf = np.hypot(vf[:, :, 0], vf[:, :, 1])
    th = _theta(rho, vmagf, mu, ws.edK[:, None], cfg.dt_inv, cfg.c_dt, cfg.c_St)
    s = np.sqrt(4.0 * th**2 + (rho * vnf) ** 2)
    alpha = (4.0 * th**2 / (rho * np.abs(vnf) + s)) ** 2 / (4.0 * s)
    big = 0.5 * (np.abs(rho * vnf) + s)
    lam_m = np.where(rho * vnf >= 0, -(th**2) / big, -big)
    vn_minus = np.minimum(vn, 0.0)
    dnv = np.einsum("kqcd,kqd->kqc", gradv, ws.en)
    dnvn = np.einsum("kqc,kqc->kq", dnv, ws.en)

    from .forms import _eval_edge_data
    evD, epD = _eval_edge_data(ws, data, t)
    vDn = np.einsum("kqc,kqc->kq", evD, ws.en)

    # q_i = mu dnv_i - p n_i - rho v_n v_i
    q = mu * dnv - p[:, :, None] * ws.en - rho * vn[:, :, None] * v
    eps = np.zeros_like(q)
    tag = ws.etag
    for k_tag in (BCTag.WALL, BCTag.SYMMETRY):
        m = tag == int(k_tag)
        if not m.any():
            continue
        e = (vn[m][:, :, None] * (alpha[m][:, :, None] * ws.en[m] - 0.5 * rho * v[m])
             - rho * vn_minus[m][:, :, None] * v[m])
        if k_tag == BCTag.WALL:
            e = e + gamma * mu / ws.edK[m][:, None, None] * v[m]
        else:
            e = e + (gamma * mu / ws.edK[m][:, None] * vn[m])[:, :, None] * ws.en[m] \
                + mu * (dnv[m] - dnvn[m][:, :, None] * ws.en[m])
        eps[m] = e
    m = tag == BCTag.INFLOW
    if m.any():
        dv = v[m] - evD[m]
        eps[m] = ((vn[m] - vDn[m])[:, :, None] * (alpha[m][:, :, None] * ws.en[m] - 0.5 * rho * v[m])
                  - rho * vn_minus[m][:, :, None] * dv
                  + gamma * mu / ws.edK[m][:, None, None] * dv)
    m = tag == BCTag.OUTFLOW
    if m.any():
        if cfg.outflow_mode == "energy":
            eps[m] = (mu * dnv[m] - rho * vn_minus[m][:, :, None] * v[m]
                      - (p[m] - epD[m])[:, :, None] * ws.en[m]
                      + (rho / (2.0 * th[m]) * (rho * vn_minus[m] * vn[m] + p[m] - epD[m]
                                                - mu * dnvn[m]))[:, :, None] * v[m])
        else:
            # do-nothing: natural vector-Laplacian outflow
            eps[m] = mu * dnv[m] - (p[m] - epD[m])[:, :, None] * ws.en[m]
    m = tag == BCTag.CHARACTERISTIC
    if m.any():
        thc = np.ones_like(th[m]) if cfg.char_theta == "unit" else th[m]
        sc = np.sqrt(4.0 * thc**2 + (rho * vnf[m]) ** 2)
        bigc = 0.5 * (np.abs(rho * vnf[m]) + sc)
        lamc = np.where(rho * vnf[m] >= 0, -(thc**2) / bigc, -bigc)
        vnfm = np.minimum(vnf[m], 0.0)
        dv = v[m] - evD[m]
        dp = p[m] - epD[m]
        dvn = np.einsum("kqc,kqc->kq", dv, ws.en[m])
        dvt = dv - dvn[:, :, None] * ws.en[m]
        z = (dp + lamc * dvn) / sc
        # psi^i = (e^i, rho v_i / 2): A^-(u-uD).psi^i
        neg_i = (rho * vnfm[:, :, None] * dvt
                 - (z * lamc)[:, :, None] * ws.en[m]
                 - (z * 0.5 * rho)[:, :, None] * v[m])
        eps[m] = mu * dnv[m] - neg_i
    return q - eps, ws


def boundary_momentum_flux(u, mesh, cfg, data, t=0.0, edge_mask=None):
    """Componentwise integral of q_h = q - eps_h over (masked) boundary edges."""
    qh, ws = _edge_qh_minus_eps(u, mesh, cfg, data, t=t)
    w = ws.ew if edge_mask is None else ws.ew * edge_mask[:, None]
    return np.einsum("kq,kqc->c", w, qh)


def momentum_balance(u, history, cfg, mesh, data, t=0.0):
    """Both sides of the discrete momentum balance, per component.

    lhs = rho D_t int v_h ; rhs = int f + SUPG correction + boundary flux of
    q_h.  At exact Newton convergence lhs == rhs by construction.
    """
    ws = workspace(mesh)
    rho, mu = cfg.rho, cfg.mu
    und = u.reshape(-1, 3)
    v_loc = und[mesh.cells][:, :, :2]
    vq = np.einsum("qa,mac->mqc", ws.N, v_loc)
    gradv = np.einsum("mqad,mac->mqcd", ws.grads, v_loc)
    gradp = np.einsum("mqad,ma->mqd", ws.grads, und[mesh.cells][:, :, 2])

    if history is not None and not np.isinf(cfg.d_t):
        if len(history) == 1:
            c0, ch = 1.0 / cfg.d_t, [-1.0 / cfg.d_t]
        else:
            c0, ch = 1.5 / cfg.d_t, [-2.0 / cfg.d_t, 0.5 / cfg.d_t]
        vdot = c0 * vq
        for h, uh in enumerate(history):
            vdot = vdot + ch[h] * np.einsum(
                "qa,mac->mqc", ws.N, uh.reshape(-1, 3)[mesh.cells][:, :, :2])
        lhs = rho * np.einsum("mq,mqc->c", ws.wdet, vdot)
    else:
        c0, ch, vdot = 0.0, [], np.zeros_like(vq)
        lhs = np.zeros(2)

    from .forms import _eval_body_force
    fq = _eval_body_force(ws, data, t)
    E = rho * vdot + rho * np.einsum("mqd,mqcd->mqc", vq, gradv) + gradp
    vmag = np.hypot(vq[:, :, 0], vq[:, :, 1])
    th = _theta(rho, vmag, mu, ws.dK[:, None], cfg.dt_inv, cfg.c_dt, cfg.c_St)
    g1 = cfg.gamma1 * ws.dK[:, None] / th
    # Etest(psi^i) = rho/2 grad v_i ; correction_i = sum_K gamma_K1 (f-E).grad v_i
    corr = 0.5 * rho * np.einsum("mq,mqc,mqic->i", ws.wdet * g1, fq - E, gradv)
    rhs = np.einsum("mq,mqc->c", ws.wdet, fq) + corr
    rhs = rhs + boundary_momentum_flux(u, mesh, cfg, data, t=t)
    return lhs, rhs


def drag_coefficient(u, mesh, cfg, data, history=None, t=0.0,
                     u_mean=0.2, diameter=0.1, geom=0):
    """Drag on the circle-tagged boundary (Schaefer-Turek normalization).

    Returns (C_D weighted-residual, C_D direct q_h integral).  The weighted
    value tests the residual, assembled without the cylinder edges, with the
    discrete lift psi_w = (e1, rho v1/2) on the cylinder nodes.
    """
    if not np.any(mesh.bedge_geom == geom):
        raise ValueError("no circle-tagged boundary edges in this mesh")
    ws = workspace(mesh)
    cyl_edges = mesh.bedge_geom == geom
    cyl_nodes = np.unique(mesh.bedge_nodes[cyl_edges])
    und = u.reshape(-1, 3)

    psi_w = np.zeros_like(u)
    pw = psi_w.reshape(-1, 3)
    pw[cyl_nodes, 0] = 1.0
    pw[cyl_nodes, 2] = 0.5 * cfg.rho * und[cyl_nodes, 0]

    mask = (~cyl_edges).astype(float)
    R = assemble_residual(u, mesh, cfg, data, t=t, history=history, edge_mask=mask)
    # interior convective flux onto the cylinder ring
    v, _, _ = _edge_state(ws, u)
    vn = np.einsum("kqc,kqc->kq", v, ws.en)
    ring = 0.5 * cfg.rho * float(np.sum(ws.ew[cyl_edges] * (vn * v[:, :, 0])[cyl_edges]))
    fx = -float(psi_w @ R) + ring

    flux = boundary_momentum_flux(u, mesh, cfg, data, t=t,
                                  edge_mask=cyl_edges.astype(float))
    fx_direct = -float(flux[0])
    norm = 2.0 / (cfg.rho * u_mean**2 * diameter)
    return norm * fx, norm * fx_direct


def exact_errors(u, mesh, exact_v, exact_gradv, exact_p, qorder=4):
    """L2 pressure, H1-seminorm and L2 velocity errors by over-integration."""
    ws = workspace(mesh, qcell=qorder)
    und = u.reshape(-1, 3)
    v_loc = und[mesh.cells][:, :, :2]
    p_loc = und[mesh.cells][:, :, 2]
    vq = np.einsum("qa,mac->mqc", ws.N, v_loc)
    pq = np.einsum("qa,ma->mq", ws.N, p_loc)
    gq = np.einsum("mqad,mac->mqcd", ws.grads, v_loc)
    pts = ws.xq.reshape(-1, 2)
    ve = np.asarray(exact_v(pts)).reshape(vq.shape)
    ge = np.asarray(exact_gradv(pts)).reshape(gq.shape)
    pe = np.asarray(exact_p(pts)).reshape(pq.shape)
    p_l2 = np.sqrt(np.sum(ws.wdet * (pq - pe) ** 2))
    v_h1 = np.sqrt(np.sum(ws.wdet * np.einsum("mqcd->mq", (gq - ge) ** 2)))
    v_l2 = np.sqrt(np.sum(ws.wdet * np.einsum("mqc->mq", (vq - ve) ** 2)))
    return {"p_l2": float(p_l2), "v_h1": float(v_h1), "v_l2": float(v_l2)}


def convergence_orders(values):
    """log2 ratios between consecutive uniform-refinement error values."""
    out = [float("nan")]
    for a, b in zip(values[:-1], values[1:]):
        out.append(np.log2(a / b))
    return out
