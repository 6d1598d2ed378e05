"""Form identities: energy/coercivity expressions, Jacobian FD checks,
consistency properties of the boundary terms."""

import numpy as np
import pytest

from nitscheflow.diagnostics import boundary_energy_form
from nitscheflow.forms import (
    BoundaryData,
    ConfigurationError,
    FormConfig,
    Parts,
    apply_strong_constraints,
    assemble_jacobian,
    assemble_residual,
    assemble_supg,
    strong_constraints,
    workspace,
)
from nitscheflow.mesh import BCTag, Mesh, generate_rectangle, generate_T_jet
from nitscheflow.operators import neg_theta_bilinear, BoundaryPoint

RNG = np.random.default_rng(11)

ZDATA = BoundaryData(
    v_in=lambda x, t: np.zeros((len(x), 2)),
    p_out=lambda x, t: np.zeros(len(x)),
    v_char=lambda x, t: np.zeros((len(x), 2)),
    p_char=lambda x, t: np.zeros(len(x)),
)


def mixed_mesh(level=0):
    mesh = generate_T_jet(level=level)
    tags = mesh.bedge_tag.copy()
    wall = np.where(tags == int(BCTag.WALL))[0]
    tags[wall[::5]] = int(BCTag.SYMMETRY)
    tags[wall[1::5]] = int(BCTag.CHARACTERISTIC)
    mesh.bedge_tag = tags
    return mesh


def test_zero_field_zero_residual():
    mesh = generate_T_jet(level=0)
    cfg = FormConfig(rho=1.0, mu=0.01, d_t=0.1)
    u = np.zeros(3 * mesh.n_nodes)
    R = assemble_residual(u, mesh, cfg, ZDATA, history=[u])
    assert np.abs(R).max() == 0.0


def test_constant_field_reduces_to_boundary_terms():
    # v = (c, 0), p = 0 on an all-wall square: grad v = 0, div v = 0, so the
    # interior contribution collapses to the integrated-by-parts convective
    # flux -rho/2 (v.n)(v.phi) on the boundary
    mesh = generate_rectangle(0, 1, 0, 1, 4, 4)
    cfg = FormConfig(rho=1.0, mu=0.0, d_t=np.inf)
    u = np.zeros(3 * mesh.n_nodes)
    u.reshape(-1, 3)[:, 0] = 0.7
    full = assemble_residual(u, mesh, cfg, ZDATA, parts=Parts.form_only())
    bonly = assemble_residual(u, mesh, cfg, ZDATA,
                              parts=Parts(time=False, galerkin=False, viscous=False,
                                          boundary=True, supg=False, data=False,
                                          body_force=False))
    ws = workspace(mesh)
    flux = np.zeros_like(u)
    c = 0.7
    for k in range(len(ws.etag)):
        for q in range(ws.ew.shape[1]):
            vn = c * ws.en[k, q, 0]
            for a in range(4):
                flux[3 * ws.ecn[k, a]] += -0.5 * ws.ew[k, q] * vn * c * ws.eN[k, q, a]
    np.testing.assert_allclose(full, bonly + flux, atol=1e-13)
    assert np.abs(bonly).max() > 0


def test_euler_energy_identity():
    # assembled a^Eu(psi)(psi) equals the positivity expression, 20 random fields
    mesh = mixed_mesh()
    cfg = FormConfig(rho=1.3, mu=0.0, d_t=0.1)
    for _ in range(20):
        u = RNG.normal(size=3 * mesh.n_nodes) * 0.8
        R = assemble_residual(u, mesh, cfg, ZDATA, parts=Parts.form_only())
        lhs = float(u @ R)
        rhs = boundary_energy_form(u, mesh, cfg)["total"]
        assert lhs == pytest.approx(rhs, rel=1e-10)
        assert lhs >= -1e-12 * abs(rhs)


def test_nast_coercivity_identity():
    mesh = mixed_mesh()
    cfg = FormConfig(rho=0.9, mu=0.05, d_t=0.05)
    for _ in range(20):
        u = RNG.normal(size=3 * mesh.n_nodes) * 0.8
        R = assemble_residual(u, mesh, cfg, ZDATA, parts=Parts.form_only())
        lhs = float(u @ R)
        parts = boundary_energy_form(u, mesh, cfg)
        assert lhs == pytest.approx(parts["total"], rel=1e-10)
        # gamma=100 is large enough: nonnegative on every tested field
        assert lhs >= -1e-12 * abs(parts["total"])


def test_viscous_block_symmetry():
    # the wall/in/sym Nitsche viscous terms are symmetric bilinear forms
    mesh = generate_rectangle(0, 1, 0, 1, 3, 3,
                              tags={"left": BCTag.INFLOW, "top": BCTag.SYMMETRY})
    cfg = FormConfig(rho=1.0, mu=0.3, d_t=np.inf)
    u = RNG.normal(size=3 * mesh.n_nodes)
    parts = Parts(time=False, galerkin=False, viscous=True, boundary=False,
                  supg=False, data=False, body_force=False)
    J = assemble_jacobian(u, mesh, cfg, ZDATA, parts=parts)
    d = (J - J.T)
    assert abs(d).max() <= 1e-12 * abs(J).max()


def test_jacobian_fd_all_modes():
    mesh = mixed_mesh()
    for mode, mu, outflow, ct in [
        ("balanced", 0.0, "energy", "balanced"),
        ("balanced", 0.02, "energy", "balanced"),
        ("balanced", 0.02, "do_nothing", "balanced"),
        ("alternative", 0.0, "energy", "unit"),
        ("stokes", 0.1, "energy", "balanced"),
    ]:
        cfg = FormConfig(rho=1.1, mu=mu, d_t=0.08, mode=mode,
                         outflow_mode=outflow, char_theta=ct)
        u = RNG.normal(size=3 * mesh.n_nodes) * 0.5
        hist = [RNG.normal(size=u.shape) * 0.5]
        J = assemble_jacobian(u, mesh, cfg, ZDATA, history=hist)
        d = RNG.normal(size=u.shape)
        eps = 1e-6 * max(1.0, np.abs(u).max())
        Rp = assemble_residual(u + eps * d, mesh, cfg, ZDATA, history=hist, ufro=u)
        Rm = assemble_residual(u - eps * d, mesh, cfg, ZDATA, history=hist, ufro=u)
        fd = (Rp - Rm) / (2 * eps)
        err = np.linalg.norm(fd - J @ d) / np.linalg.norm(J @ d)
        assert err < 1e-6, (mode, mu, outflow, err)


def test_stokes_jacobian_constant_in_u():
    mesh = generate_T_jet(level=0)
    cfg = FormConfig(rho=1.0, mu=0.2, d_t=np.inf, mode="stokes")
    u1 = RNG.normal(size=3 * mesh.n_nodes)
    u2 = RNG.normal(size=3 * mesh.n_nodes)
    J1 = assemble_jacobian(u1, mesh, cfg, ZDATA)
    J2 = assemble_jacobian(u2, mesh, cfg, ZDATA)
    assert abs(J1 - J2).max() <= 1e-13 * abs(J1).max()


def test_supg_positive_and_parameter_product():
    mesh = generate_T_jet(level=0)
    cfg = FormConfig(rho=1.0, mu=0.0, d_t=np.inf)
    for _ in range(10):
        u = RNG.normal(size=3 * mesh.n_nodes)
        R = np.zeros_like(u)
        assemble_supg(u, None, cfg, mesh, ZDATA, R)
        assert float(u @ R) >= 0.0
    # gamma_K1 * gamma_K2 = gamma1*gamma2*d_K^2 independently of theta
    dK = 0.37
    for vmag in (0.0, 1.0, 10.0):
        th = np.sqrt((1.0 * vmag) ** 2 + (0.1 * 1.0 * dK / 0.01) ** 2)
        g1 = cfg.gamma1 * dK / th
        g2 = cfg.gamma2 * dK * th
        assert g1 * g2 == pytest.approx(cfg.gamma1 * cfg.gamma2 * dK**2, rel=1e-14)


def test_char_penalty_vanishes_at_exact_data():
    mesh = generate_T_jet(level=0, characteristic=True)
    cfg = FormConfig(rho=1.0, mu=0.0, d_t=0.1)
    vD = np.array([0.4, -0.2])
    pD = 0.9
    data = BoundaryData(v_char=lambda x, t: np.tile(vD, (len(x), 1)),
                        p_char=lambda x, t: np.full(len(x), pD))
    u = np.zeros(3 * mesh.n_nodes)
    und = u.reshape(-1, 3)
    und[:, :2] = vD
    und[:, 2] = pD
    # residual on char edges must reduce to the pure flux (rho/2 vn v + p n, 0)
    ws = workspace(mesh)
    char_mask = (ws.etag == int(BCTag.CHARACTERISTIC)).astype(float)
    parts = Parts(time=False, galerkin=False, viscous=False, boundary=True,
                  supg=False, data=True, body_force=False)
    R = assemble_residual(u, mesh, cfg, data, parts=parts, edge_mask=char_mask)
    ref = np.zeros_like(u)
    for k in np.where(char_mask > 0)[0]:
        for q in range(ws.ew.shape[1]):
            n = ws.en[k, q]
            vn = vD @ n
            for a in range(4):
                na = ws.ecn[k, a]
                Na = ws.eN[k, q, a]
                ref[3 * na + 0] += ws.ew[k, q] * (0.5 * vn * vD[0] + pD * n[0]) * Na
                ref[3 * na + 1] += ws.ew[k, q] * (0.5 * vn * vD[1] + pD * n[1]) * Na
    np.testing.assert_allclose(R, ref, atol=1e-12 * max(1.0, np.abs(ref).max()))


def test_char_unit_theta_matches_operator_module():
    # theta=1 characteristic term equals the closed-form operator with theta=1
    mesh = generate_T_jet(level=0, characteristic=True)
    cfg = FormConfig(rho=1.2, mu=0.0, d_t=0.1, char_theta="unit")
    u = RNG.normal(size=3 * mesh.n_nodes) * 0.5
    ws = workspace(mesh)
    char_mask = (ws.etag == int(BCTag.CHARACTERISTIC)).astype(float)
    parts = Parts(time=False, galerkin=False, viscous=False, boundary=True,
                  supg=False, data=False, body_force=False)
    R = assemble_residual(u, mesh, cfg, ZDATA, parts=parts, edge_mask=char_mask)
    und = u.reshape(-1, 3)
    ref = np.zeros_like(u)
    for k in np.where(char_mask > 0)[0]:
        for q in range(ws.ew.shape[1]):
            n = ws.en[k, q]
            pt = BoundaryPoint(n=n, rho=cfg.rho, theta=1.0)
            v = np.zeros(2)
            p = 0.0
            for a in range(4):
                na = ws.ecn[k, a]
                v += ws.eN[k, q, a] * und[na, :2]
                p += ws.eN[k, q, a] * und[na, 2]
            vn = v @ n
            for a in range(4):
                na = ws.ecn[k, a]
                Na = ws.eN[k, q, a]
                w = ws.ew[k, q]
                for i in range(2):
                    ei = np.zeros(2)
                    ei[i] = 1.0
                    flux = 0.5 * cfg.rho * vn * v[i] + p * n[i]
                    pen = neg_theta_bilinear(pt, vn, (v, p), (ei * Na, 0.0))
                    ref[3 * na + i] += w * (flux * Na - pen)
                ref[3 * na + 2] += -w * neg_theta_bilinear(pt, vn, (v, p), (np.zeros(2), Na))
    np.testing.assert_allclose(R, ref, rtol=1e-11, atol=1e-12)


def test_wall_equals_char_with_reflection_data_when_vn_zero():
    # field with v.n = 0 nodally on an axis-aligned wall: the a^Eu wall terms
    # equal the characteristic terms with u^D = u (consistency of the added
    # stabilization terms)
    mesh = generate_rectangle(0, 1, 0, 1, 4, 4)
    cfg = FormConfig(rho=1.0, mu=0.0, d_t=0.1)
    u = RNG.normal(size=3 * mesh.n_nodes)
    und = u.reshape(-1, 3)
    # zero the normal component at boundary nodes (axis-aligned sides)
    tol = 1e-12
    on_v = (np.abs(mesh.nodes[:, 0]) < tol) | (np.abs(mesh.nodes[:, 0] - 1) < tol)
    on_h = (np.abs(mesh.nodes[:, 1]) < tol) | (np.abs(mesh.nodes[:, 1] - 1) < tol)
    und[on_v, 0] = 0.0
    und[on_h, 1] = 0.0
    parts = Parts(time=False, galerkin=False, viscous=False, boundary=True,
                  supg=False, data=True, body_force=False)
    R_wall = assemble_residual(u, mesh, cfg, ZDATA, parts=parts)

    mesh_char = generate_rectangle(0, 1, 0, 1, 4, 4,
                                   tags={s: BCTag.CHARACTERISTIC for s in
                                         ("left", "right", "top", "bottom")})
    vals_v = und[:, :2].copy()
    vals_p = und[:, 2].copy()

    # reflection data u - (2 v_n n, 0) equals the field itself when v_n = 0;
    # evaluate the field trace by interpolation on the structured grid
    def vfun(x, t):
        out = np.empty((len(x), 2))
        for i, (a, b) in enumerate(x):
            out[i] = _interp_nodal(mesh, vals_v, a, b)
        return out

    def pfun(x, t):
        return np.array([_interp_nodal(mesh, vals_p[:, None], a, b)[0] for a, b in x])

    data = BoundaryData(v_char=vfun, p_char=pfun)
    R_char = assemble_residual(u, mesh_char, cfg, data, parts=parts)
    scale = max(np.abs(R_wall).max(), 1.0)
    np.testing.assert_allclose(R_wall, R_char, atol=1e-11 * scale)


def _interp_nodal(mesh, nodal, x, y):
    # linear interpolation along boundary edges of a structured unit square
    # (sufficient for the test: points lie on edges)
    n = int(round(np.sqrt(mesh.n_nodes))) - 1
    xs = np.linspace(0, 1, n + 1)
    i = min(np.searchsorted(xs, x + 1e-14) - 1, n - 1)
    j = min(np.searchsorted(xs, y + 1e-14) - 1, n - 1)
    i = max(i, 0)
    j = max(j, 0)
    sx = (x - xs[i]) / (xs[i + 1] - xs[i])
    sy = (y - xs[j]) / (xs[j + 1] - xs[j])
    idx = lambda ii, jj: jj * (n + 1) + ii
    val = ((1 - sx) * (1 - sy) * nodal[idx(i, j)]
           + sx * (1 - sy) * nodal[idx(i + 1, j)]
           + sx * sy * nodal[idx(i + 1, j + 1)]
           + (1 - sx) * sy * nodal[idx(i, j + 1)])
    return val


def test_outflow_energy_reduces_to_unmodified_for_outgoing_flow():
    # v_n >= 0 on the outflow: the v_n^- term switches off and the pressure
    # row is (1/theta)(p - p^D)
    mesh = generate_rectangle(0, 1, 0, 1, 3, 3, tags={"right": BCTag.OUTFLOW})
    cfg = FormConfig(rho=1.0, mu=0.0, d_t=0.1)
    u = np.zeros(3 * mesh.n_nodes)
    und = u.reshape(-1, 3)
    und[:, 0] = 1.0 + 0.3 * mesh.nodes[:, 1]  # v_n = v_1 > 0 at x=1
    und[:, 2] = RNG.normal(size=mesh.n_nodes)
    parts = Parts(time=False, galerkin=False, viscous=False, boundary=True,
                  supg=False, data=False, body_force=False)
    R = assemble_residual(u, mesh, cfg, ZDATA, parts=parts)
    ws = workspace(mesh)
    ref = np.zeros_like(u)
    for k in np.where(ws.etag == int(BCTag.OUTFLOW))[0]:
        for q in range(ws.ew.shape[1]):
            n = ws.en[k, q]
            v = np.zeros(2)
            p = 0.0
            for a in range(4):
                na = ws.ecn[k, a]
                v += ws.eN[k, q, a] * und[na, :2]
                p += ws.eN[k, q, a] * und[na, 2]
            vn = v @ n
            th = np.sqrt(vn**2 * 0 + (v @ v) + (0.1 * ws.edK[k] / 0.1) ** 2)
            for a in range(4):
                na = ws.ecn[k, a]
                Na = ws.eN[k, q, a]
                w = ws.ew[k, q]
                for i in range(2):
                    ref[3 * na + i] += w * 0.5 * abs(vn) * v[i] * Na
                ref[3 * na + 2] += w * p / th * Na
    # wall edges also contribute; compare only outflow rows via the mask
    mask = np.zeros(len(ws.etag))
    mask[ws.etag == int(BCTag.OUTFLOW)] = 1.0
    R_out = assemble_residual(u, mesh, cfg, ZDATA, parts=parts, edge_mask=mask)
    np.testing.assert_allclose(R_out, ref, rtol=1e-11, atol=1e-13)


def test_alternative_strong_rows():
    mesh = generate_T_jet(level=0)
    cfg = FormConfig(rho=1.0, mu=0.0, d_t=0.1, mode="alternative", char_theta="unit")
    data = BoundaryData(v_in=lambda x, t: np.column_stack([np.ones(len(x)), np.zeros(len(x))]),
                        p_out=lambda x, t: np.zeros(len(x)))
    cons = strong_constraints(mesh, data)
    normal_nodes, nvecs, full_nodes, fvals = cons
    assert len(normal_nodes) > 0 and len(full_nodes) > 0
    u = RNG.normal(size=3 * mesh.n_nodes)
    R = assemble_residual(u, mesh, cfg, data, history=[u * 0])
    J = assemble_jacobian(u, mesh, cfg, data, history=[u * 0])
    Rt, Jt = apply_strong_constraints(R, J, u, cons)
    und = u.reshape(-1, 3)
    # the constraint row is exactly v.n at wall nodes
    for k, node in enumerate(normal_nodes[:10]):
        assert Rt[3 * node + 1] == pytest.approx(und[node, :2] @ nvecs[k], abs=1e-14)
    for k, node in enumerate(full_nodes[:10]):
        assert Rt[3 * node] == pytest.approx(und[node, 0] - fvals[k, 0], abs=1e-14)
    # Jacobian rows replaced by the constraint gradients
    row = Jt.getrow(3 * int(normal_nodes[0]) + 1).toarray().ravel()
    nz = np.nonzero(row)[0]
    assert set(nz) <= {3 * int(normal_nodes[0]), 3 * int(normal_nodes[0]) + 1}


def test_single_cell_scale_equivariance():
    # (x, v, p, d_K) -> (s x, s v, s^2 p, s d_K) with d_t fixed multiplies
    # velocity-row entries by s^3 and pressure-row entries by s^2
    s = 10.0
    tags = {"left": BCTag.INFLOW, "right": BCTag.OUTFLOW, "top": BCTag.WALL,
            "bottom": BCTag.CHARACTERISTIC}
    m1 = generate_rectangle(0, 1, 0, 1, 1, 1, tags=tags)
    m2 = generate_rectangle(0, s, 0, s, 1, 1, tags=tags)
    cfg = FormConfig(rho=1.3, mu=0.0, d_t=0.05)
    u = RNG.normal(size=3 * m1.n_nodes)
    h = RNG.normal(size=3 * m1.n_nodes)
    us, hs = u.copy(), h.copy()
    us.reshape(-1, 3)[:, :2] *= s
    us.reshape(-1, 3)[:, 2] *= s**2
    hs.reshape(-1, 3)[:, :2] *= s
    hs.reshape(-1, 3)[:, 2] *= s**2
    R1 = assemble_residual(u, m1, cfg, ZDATA, history=[h])
    R2 = assemble_residual(us, m2, cfg, ZDATA, history=[hs])
    vel = np.tile([True, True, False], m1.n_nodes)
    np.testing.assert_allclose(R2[vel], s**3 * R1[vel], rtol=1e-12)
    np.testing.assert_allclose(R2[~vel], s**2 * R1[~vel], rtol=1e-12)


def test_missing_data_raises():
    mesh = generate_T_jet(level=0)
    cfg = FormConfig()
    with pytest.raises(ConfigurationError):
        assemble_residual(np.zeros(3 * mesh.n_nodes), mesh, cfg, BoundaryData())
