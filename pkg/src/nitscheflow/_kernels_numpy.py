"""Vectorized numpy assembly kernels (reference / fallback backend).

Every kernel returns per-entity local contributions; the caller scatters them
into global vectors/matrices.  Signatures are shared with the numba backend.

Local dof layout per cell: slot a*3+c for node a in 0..3, c in {0: v1, 1: v2,
2: p}.  "fro" arrays carry the Picard-frozen iterate: theta, |v_n|, v_n^+-,
alpha, lambda_m and the SUPG weights are evaluated there, everything else at u.
"""

import numpy as np

# mode / flag encodings shared with the numba backend
MODE_BALANCED = 0
MODE_ALTERNATIVE = 1
MODE_STOKES = 2
OUT_ENERGY = 0
OUT_DO_NOTHING = 1

TAG_WALL = 0
TAG_IN = 1
TAG_OUT = 2
TAG_SYM = 3
TAG_CHAR = 4


def _theta(rho, vmag, mu, dK, dti, c_dt, c_St):
    return np.sqrt((rho * vmag) ** 2 + (c_dt * rho * dK * dti) ** 2 + (c_St * mu / dK) ** 2)


def _cell_fields(cells, N, grads, und):
    v_loc = und[cells][:, :, :2]          # (M,4,2)
    p_loc = und[cells][:, :, 2]           # (M,4)
    v = np.einsum("qa,mac->mqc", N, v_loc)
    p = np.einsum("qa,ma->mq", N, p_loc)
    gradv = np.einsum("mqad,mac->mqcd", grads, v_loc)
    gradp = np.einsum("mqad,ma->mqd", grads, p_loc)
    return v_loc, p_loc, v, p, gradv, gradp


def cell_residual(cells, N, grads, wdet, lap, dK,
                  und, ufro, hv, bdf0, bdfh, fq,
                  rho, mu, c_dt, c_St, dti, gamma1, gamma2,
                  flg_time, flg_galerkin, flg_visc, flg_supg, flg_f,
                  mode, flg_lap):
    M, Q = wdet.shape
    R = np.zeros((M, 4, 3))
    v_loc, p_loc, v, p, gradv, gradp = _cell_fields(cells, N, grads, und)
    vfro = np.einsum("qa,mac->mqc", N, ufro[cells][:, :, :2])
    divv = gradv[:, :, 0, 0] + gradv[:, :, 1, 1]
    vg = np.einsum("mqd,mqad->mqa", v, grads)        # (v . grad N_a)
    vgf = np.einsum("mqd,mqad->mqa", vfro, grads)    # frozen advection in E(psi)
    if mode == MODE_STOKES:
        vgf = np.zeros_like(vgf)

    # the discrete BDF derivative feeds both the mass term and E(u)
    vdot = np.zeros_like(v)
    if bdf0 != 0.0:
        vdot = bdf0 * v
        for h in range(hv.shape[0]):
            vdot = vdot + bdfh[h] * np.einsum("qa,mac->mqc", N, hv[h][cells])

    conv = np.einsum("mqd,mqcd->mqc", v, gradv)      # (v . grad) v

    w = wdet
    if flg_time and bdf0 != 0.0:
        R[:, :, :2] += rho * np.einsum("mq,mqc,qa->mac", w, vdot, N)

    if flg_galerkin:
        if mode == MODE_ALTERNATIVE:
            # -rho v . (v . grad phi)
            R[:, :, :2] += -rho * np.einsum("mq,mqc,mqa->mac", w, v, vg)
        elif mode != MODE_STOKES:
            R[:, :, :2] += 0.5 * rho * (
                np.einsum("mq,mqc,qa->mac", w, conv, N)
                - np.einsum("mq,mqc,mqa->mac", w, v, vg)
            )
        # chi div v - p div phi
        R[:, :, 2] += np.einsum("mq,mq,qa->ma", w, divv, N)
        R[:, :, :2] -= np.einsum("mq,mq,mqac->mac", w, p, grads)

    if flg_visc and mu > 0.0:
        R[:, :, :2] += mu * np.einsum("mq,mqcd,mqad->mac", w, gradv, grads)

    if flg_f and flg_galerkin:
        R[:, :, :2] -= np.einsum("mq,mqc,qa->mac", w, fq, N)

    if flg_supg:
        vmagf = np.hypot(vfro[:, :, 0], vfro[:, :, 1])
        if mode == MODE_STOKES:
            vmagf = np.zeros_like(vmagf)
        th = _theta(rho, vmagf, mu, dK[:, None], dti, c_dt, c_St)
        g1 = gamma1 * dK[:, None] / th
        g2 = gamma2 * dK[:, None] * th
        E = rho * vdot + gradp
        if mode != MODE_STOKES:
            E = E + rho * conv
        if flg_lap and mu > 0.0:
            lapv = np.einsum("mqa,mac->mqc", lap, v_loc)
            E = E - mu * lapv
        if flg_f:
            E = E - fq
        # velocity test rows: Etest = rho (vfro . grad N_a) e_i  (- mu lap N_a e_i)
        we1 = w * g1
        R[:, :, :2] += rho * np.einsum("mq,mqc,mqa->mac", we1, E, vgf)
        if flg_lap and mu > 0.0:
            R[:, :, :2] -= mu * np.einsum("mq,mqc,mqa->mac", we1, E, lap)
        # pressure test rows: Etest = grad N_a
        R[:, :, 2] += np.einsum("mq,mqd,mqad->ma", we1, E, grads)
        # grad-div term
        R[:, :, :2] += np.einsum("mq,mq,mqac->mac", w * g2, divv, grads)

    return R


def cell_jacobian(cells, N, grads, wdet, lap, dK,
                  und, ufro, hv, bdf0, bdfh, fq,
                  rho, mu, c_dt, c_St, dti, gamma1, gamma2,
                  flg_time, flg_galerkin, flg_visc, flg_supg, flg_f,
                  mode, flg_lap):
    M, Q = wdet.shape
    J = np.zeros((M, 12, 12))
    v_loc, p_loc, v, p, gradv, gradp = _cell_fields(cells, N, grads, und)
    vfro = np.einsum("qa,mac->mqc", N, ufro[cells][:, :, :2])
    vg = np.einsum("mqd,mqad->mqa", v, grads)
    vgf = np.einsum("mqd,mqad->mqa", vfro, grads)
    if mode == MODE_STOKES:
        vgf = np.zeros_like(vgf)
    w = wdet

    Jv = J.reshape(M, 4, 3, 4, 3)

    eye = np.eye(2)
    if flg_time and bdf0 != 0.0:
        blk = rho * bdf0 * np.einsum("mq,qa,qb->mab", w, N, N)
        for i in range(2):
            Jv[:, :, i, :, i] += blk

    if flg_galerkin:
        if mode == MODE_ALTERNATIVE:
            # d[-rho v.(v.grad phi)] = -rho[dv.(v.grad phi) + v.(dv.grad phi)]
            t3 = np.einsum("mq,qb,mqa->mab", w, N, vg)
            for i in range(2):
                Jv[:, :, i, :, i] += -rho * t3
            Jv[:, :, :2, :, :2] += -rho * np.einsum(
                "mq,mqc,qb,mqaj->macbj", w, v, N, grads)
        elif mode != MODE_STOKES:
            # skew convection, differentiated in both slots
            t1 = np.einsum("mq,qa,qb,mqcj->macbj", w, N, N, gradv)
            t2 = np.einsum("mq,qa,mqb->mab", w, N, np.einsum("mqd,mqbd->mqb", v, grads))
            t3 = np.einsum("mq,qb,mqa->mab", w, N, vg)
            t4 = np.einsum("mq,mqc,qb,mqaj->macbj", w, v, N, grads)
            Jv[:, :, :2, :, :2] += 0.5 * rho * (t1 - t4)
            for i in range(2):
                Jv[:, :, i, :, i] += 0.5 * rho * (t2 - t3)
        # chi div dv ; -dp div phi
        Jv[:, :, 2, :, :2] += np.einsum("mq,qa,mqbj->mabj", w, N, grads)
        Jv[:, :, :2, :, 2] -= np.einsum("mq,qb,mqai->maib", w, N, grads)

    if flg_visc and mu > 0.0:
        blk = mu * np.einsum("mq,mqad,mqbd->mab", w, grads, grads)
        for i in range(2):
            Jv[:, :, i, :, i] += blk

    if flg_supg:
        vmagf = np.hypot(vfro[:, :, 0], vfro[:, :, 1])
        if mode == MODE_STOKES:
            vmagf = np.zeros_like(vmagf)
        th = _theta(rho, vmagf, mu, dK[:, None], dti, c_dt, c_St)
        g1 = gamma1 * dK[:, None] / th
        g2 = gamma2 * dK[:, None] * th
        we1 = w * g1
        # dE wrt velocity dof (b,j): rho*bdf0*N_b e_j + rho*(N_b dv/dx_j + (v.g_b) e_j)
        # dE wrt pressure dof b: g_b
        conv_on = mode != MODE_STOKES
        # assemble dE as tensors
        dE_vel = np.zeros((M, Q, 2, 4, 2))  # component c, dof (b,j)
        if bdf0 != 0.0:
            for j in range(2):
                dE_vel[:, :, j, :, j] += rho * bdf0 * N[None, :, :]
        if conv_on:
            dE_vel += rho * np.einsum("qb,mqcj->mqcbj", N, gradv)
            for j in range(2):
                dE_vel[:, :, j, :, j] += rho * np.einsum("mqd,mqbd->mqb", v, grads)
        if flg_lap and mu > 0.0:
            for j in range(2):
                dE_vel[:, :, j, :, j] += -mu * lap
        # velocity test rows
        Etest_vel = rho * vgf  # (M,Q,4) times e_i
        if flg_lap and mu > 0.0:
            Etest_vel = Etest_vel - mu * lap
        Jv[:, :, :2, :, :2] += np.einsum("mq,mqa,mqibj->maibj", we1, Etest_vel, dE_vel)
        Jv[:, :, :2, :, 2] += np.einsum("mq,mqa,mqbi->maib", we1, Etest_vel, grads)
        # pressure test rows
        Jv[:, :, 2, :, :2] += np.einsum("mq,mqad,mqdbj->mabj", we1, grads, dE_vel)
        Jv[:, :, 2, :, 2] += np.einsum("mq,mqad,mqbd->mab", we1, grads, grads)
        # grad-div
        Jv[:, :, :2, :, :2] += np.einsum("mq,mqai,mqbj->maibj", w * g2, grads, grads)

    return J


def _edge_fields(ecn, eN, egrads, und):
    v_loc = und[ecn][:, :, :2]
    p_loc = und[ecn][:, :, 2]
    v = np.einsum("kqa,kac->kqc", eN, v_loc)
    p = np.einsum("kqa,ka->kq", eN, p_loc)
    gradv = np.einsum("kqad,kac->kqcd", egrads, v_loc)
    return v, p, gradv


def edge_residual(ecn, eN, egrads, ew, en, edK, etag,
                  und, ufro, evD, epD,
                  rho, mu, c_dt, c_St, dti, gamma,
                  mode, outflow_mode, char_unit,
                  flg_euler, flg_visc, flg_data):
    K, Qe = ew.shape
    R = np.zeros((K, 4, 3))
    if K == 0:
        return R
    v, p, gradv = _edge_fields(ecn, eN, egrads, und)
    vf, _, _ = _edge_fields(ecn, eN, egrads, ufro)
    vn = np.einsum("kqc,kqc->kq", v, en)
    vnf = np.einsum("kqc,kqc->kq", vf, en)
    vmagf = np.hypot(vf[:, :, 0], vf[:, :, 1])
    if mode == MODE_STOKES:
        vmagf = np.zeros_like(vmagf)
    th = _theta(rho, vmagf, mu, edK[:, None], dti, c_dt, c_St)
    dnv = np.einsum("kqcd,kqd->kqc", gradv, en)       # normal derivative of v
    dnvn = np.einsum("kqc,kqc->kq", dnv, en)
    gna = np.einsum("kqad,kqd->kqa", egrads, en)      # dN_a/dn
    if not flg_data:
        evD = np.zeros_like(evD)
        epD = np.zeros_like(epD)
    vDn = np.einsum("kqc,kqc->kq", evD, en)

    s = np.sqrt(4.0 * th**2 + (rho * vnf) ** 2)
    big = 0.5 * (np.abs(rho * vnf) + s)
    lam_m = np.where(rho * vnf >= 0, -(th**2) / big, -big)
    alpha = (4.0 * th**2 / (rho * np.abs(vnf) + s)) ** 2 / (4.0 * s)
    vnf_minus = np.minimum(vnf, 0.0)
    vnf_plus = np.maximum(vnf, 0.0)
    absvnf = np.abs(vnf)

    if char_unit:
        s1 = np.sqrt(4.0 + (rho * vnf) ** 2)
        big1 = 0.5 * (np.abs(rho * vnf) + s1)
        lam_m1 = np.where(rho * vnf >= 0, -1.0 / big1, -big1)
    else:
        s1, lam_m1 = s, lam_m

    wall = etag == TAG_WALL
    infl = etag == TAG_IN
    out = etag == TAG_OUT
    sym = etag == TAG_SYM
    char = etag == TAG_CHAR
    wsi = wall | infl | sym

    def addv(mask, integrand):
        # integrand (k,q,c) over masked edges -> velocity rows
        R[mask, :, :2] += np.einsum("kq,kqc,kqa->kac", ew[mask], integrand, eN[mask])

    def addp(mask, integrand):
        R[mask, :, 2] += np.einsum("kq,kq,kqa->ka", ew[mask], integrand, eN[mask])

    def addv_gna(mask, integrand):
        # velocity rows tested with dN_a/dn e_i
        R[mask, :, :2] += np.einsum("kq,kqc,kqa->kac", ew[mask], integrand, gna[mask])

    if flg_euler and mode != MODE_STOKES and mode != MODE_ALTERNATIVE:
        # wall / symmetry / inflow
        m = wsi
        addv(m, 0.5 * rho * absvnf[m][:, :, None] * v[m]
             + (alpha[m] * vn[m] + p[m])[:, :, None] * en[m])
        addp(m, -vn[m])
        m = infl
        if m.any():
            addv(m, rho * vnf_minus[m][:, :, None] * evD[m]
                 - (alpha[m] * vDn[m])[:, :, None] * en[m])
            addp(m, vDn[m])
        # outflow
        m = out
        if m.any():
            if outflow_mode == OUT_ENERGY:
                addv(m, 0.5 * rho * absvnf[m][:, :, None] * v[m]
                     + epD[m][:, :, None] * en[m])
                addp(m, (rho * vnf_minus[m] * vn[m] + p[m] - epD[m]) / th[m])
            else:
                # classical do-nothing: skew-correction flux + traction datum;
                # the pressure acts through -int p div phi alone
                addv(m, 0.5 * rho * vn[m][:, :, None] * v[m]
                     + epD[m][:, :, None] * en[m])
        # characteristic
        m = char
        if m.any():
            addv(m, 0.5 * rho * vn[m][:, :, None] * v[m] + p[m][:, :, None] * en[m])
            thc = np.ones_like(th[m]) if char_unit else th[m]
            dv = v[m] - evD[m]
            dp = p[m] - epD[m]
            dvn = np.einsum("kqc,kqc->kq", dv, en[m])
            dvt = dv - dvn[:, :, None] * en[m]
            z = (dp + lam_m1[m] * dvn) / s1[m]
            # velocity rows of -(A^-_Theta (u-uD), psi)
            R[m, :, :2] -= np.einsum(
                "kq,kqc,kqa->kac", ew[m],
                rho * vnf_minus[m][:, :, None] * dvt
                - (z * lam_m1[m])[:, :, None] * en[m], eN[m])
            # pressure rows
            R[m, :, 2] -= np.einsum("kq,kq,kqa->ka", ew[m], -z, eN[m])

    if flg_euler and mode == MODE_STOKES:
        m = wsi
        addv(m, p[m][:, :, None] * en[m])
        addp(m, -vn[m])
        m = infl
        if m.any():
            addp(m, vDn[m])
        m = out
        if m.any():
            addp(m, (p[m] - epD[m]) / th[m])
            addv(m, epD[m][:, :, None] * en[m])

    if flg_euler and mode == MODE_ALTERNATIVE:
        m = wsi
        addv(m, p[m][:, :, None] * en[m])
        addp(m, -vn[m])
        m = infl
        if m.any():
            addp(m, vDn[m])  # inflow mass-flux datum of the b-form
        m = out
        if m.any():
            addv(m, rho * vnf_plus[m][:, :, None] * v[m] + epD[m][:, :, None] * en[m])
        m = char
        if m.any():
            # -chi v_n + 1/2 A(u)(u+uD).psi + 1/2 |A|^fro (u-uD).psi, theta=1
            addp(m, -vn[m])
            sv = v[m] + evD[m]
            sp = p[m] + epD[m]
            svn = np.einsum("kqc,kqc->kq", sv, en[m])
            addv(m, 0.5 * (rho * vn[m][:, :, None] * sv + sp[:, :, None] * en[m]))
            addp(m, 0.5 * svn)
            dv = v[m] - evD[m]
            dp = p[m] - epD[m]
            dvn = np.einsum("kqc,kqc->kq", dv, en[m])
            dvt = dv - dvn[:, :, None] * en[m]
            # |A|_Theta w . psi with frozen coefficients (theta=1 matrices)
            c1 = (dp + rho * vnf[m] * dvn)
            R[m, :, :2] += 0.5 * np.einsum(
                "kq,kqc,kqa->kac", ew[m],
                rho * absvnf[m][:, :, None] * dvt
                + ((2.0 * dvn + c1 * rho * vnf[m]) / s1[m])[:, :, None] * en[m], eN[m])
            R[m, :, 2] += 0.5 * np.einsum(
                "kq,kq,kqa->ka", ew[m], (dp + c1) / s1[m], eN[m])

    if flg_visc and mu > 0.0:
        m = wall | infl
        if m.any():
            # evD is zero on wall edges by data preparation
            vd = v[m] - evD[m]
            addv(m, mu * (-dnv[m] + (gamma / edK[m])[:, None, None] * vd))
            addv_gna(m, -mu * vd)
        m = sym
        if m.any():
            addv(m, mu * (-dnvn[m] + gamma / edK[m][:, None] * vn[m])[:, :, None] * en[m])
            addv_gna(m, -mu * (vn[m][:, :, None] * en[m]))
        m = out
        if m.any() and mode != MODE_STOKES and outflow_mode == OUT_DO_NOTHING:
            pass
        elif m.any():
            addp(m, -mu * dnvn[m] / th[m])
            addv_gna(m, (-mu * (p[m] - epD[m]) / th[m]
                         + mu**2 * dnvn[m] / th[m])[:, :, None] * en[m])

    return R


def edge_jacobian(ecn, eN, egrads, ew, en, edK, etag,
                  und, ufro, evD, epD,
                  rho, mu, c_dt, c_St, dti, gamma,
                  mode, outflow_mode, char_unit,
                  flg_euler, flg_visc, flg_data):
    K, Qe = ew.shape
    J = np.zeros((K, 12, 12))
    if K == 0:
        return J
    v, p, gradv = _edge_fields(ecn, eN, egrads, und)
    vf, _, _ = _edge_fields(ecn, eN, egrads, ufro)
    vn = np.einsum("kqc,kqc->kq", v, en)
    vnf = np.einsum("kqc,kqc->kq", vf, en)
    vmagf = np.hypot(vf[:, :, 0], vf[:, :, 1])
    if mode == MODE_STOKES:
        vmagf = np.zeros_like(vmagf)
    th = _theta(rho, vmagf, mu, edK[:, None], dti, c_dt, c_St)
    gna = np.einsum("kqad,kqd->kqa", egrads, en)

    s = np.sqrt(4.0 * th**2 + (rho * vnf) ** 2)
    big = 0.5 * (np.abs(rho * vnf) + s)
    lam_m = np.where(rho * vnf >= 0, -(th**2) / big, -big)
    alpha = (4.0 * th**2 / (rho * np.abs(vnf) + s)) ** 2 / (4.0 * s)
    vnf_minus = np.minimum(vnf, 0.0)
    vnf_plus = np.maximum(vnf, 0.0)
    absvnf = np.abs(vnf)
    if char_unit:
        s1 = np.sqrt(4.0 + (rho * vnf) ** 2)
        big1 = 0.5 * (np.abs(rho * vnf) + s1)
        lam_m1 = np.where(rho * vnf >= 0, -1.0 / big1, -big1)
    else:
        s1, lam_m1 = s, lam_m

    Jv = J.reshape(K, 4, 3, 4, 3)
    wall = etag == TAG_WALL
    infl = etag == TAG_IN
    out = etag == TAG_OUT
    sym = etag == TAG_SYM
    char = etag == TAG_CHAR
    wsi = wall | infl | sym

    NN = np.einsum("kq,kqa,kqb->kqab", ew, eN, eN)       # (K,Q,4,4)
    Nn = np.einsum("kqab,kqj->kqabj", NN, en)            # test a, trial (b,j): N_a N_b n_j

    def vel_vel_diag(mask, coef):
        # coef (k,q): adds coef * N_a N_b delta_ij
        blk = np.einsum("kq,kqa,kqb->kab", ew[mask] * coef, eN[mask], eN[mask])
        for i in range(2):
            Jv[mask, :, i, :, i] += blk

    if flg_euler and mode not in (MODE_STOKES, MODE_ALTERNATIVE):
        m = wsi
        if m.any():
            vel_vel_diag(m, 0.5 * rho * absvnf[m])
            # alpha v_n n_i: d -> alpha N_b n_j n_i
            Jv[m, :, :2, :, :2] += np.einsum(
                "kq,kqab,kqi,kqj->kaibj", ew[m] * alpha[m], np.einsum("kqa,kqb->kqab", eN[m], eN[m]), en[m], en[m])
            # p n_i
            Jv[m, :, :2, :, 2] += np.einsum("kq,kqa,kqi,kqb->kaib", ew[m], eN[m], en[m], eN[m])
            # -chi v_n
            Jv[m, :, 2, :, :2] -= np.einsum("kq,kqa,kqb,kqj->kabj", ew[m], eN[m], eN[m], en[m])
        m = out
        if m.any():
            if outflow_mode == OUT_ENERGY:
                vel_vel_diag(m, 0.5 * rho * absvnf[m])
                # p-row: (1/th)(rho vnf_minus dvn + dp)
                coef = ew[m] / th[m]
                Jv[m, :, 2, :, :2] += np.einsum(
                    "kq,kqa,kqb,kqj->kabj", coef * (rho * vnf_minus[m]), eN[m], eN[m], en[m])
                Jv[m, :, 2, :, 2] += np.einsum("kq,kqa,kqb->kab", coef, eN[m], eN[m])
            else:
                # 0.5 rho (dvn v + vn dv) . phi
                vel_vel_diag(m, 0.5 * rho * vn[m])
                Jv[m, :, :2, :, :2] += 0.5 * rho * np.einsum(
                    "kq,kqa,kqc,kqb,kqj->kacbj", ew[m], eN[m], v[m], eN[m], en[m])
        m = char
        if m.any():
            # flux: 0.5 rho (dvn v + vn dv).phi + dp n
            vel_vel_diag(m, 0.5 * rho * vn[m])
            Jv[m, :, :2, :, :2] += 0.5 * rho * np.einsum(
                "kq,kqa,kqc,kqb,kqj->kacbj", ew[m], eN[m], v[m], eN[m], en[m])
            Jv[m, :, :2, :, 2] += np.einsum("kq,kqa,kqi,kqb->kaib", ew[m], eN[m], en[m], eN[m])
            # -(A^-)fro du . psi : tangential and z parts
            coef = ew[m] * rho * vnf_minus[m]
            tang = np.einsum("kq,kqa,kqb->kqab", coef, eN[m], eN[m])
            for i in range(2):
                Jv[m, :, i, :, i] -= np.einsum("kqab->kab", tang)
            Jv[m, :, :2, :, :2] += np.einsum(
                "kqab,kqi,kqj->kaibj", tang, en[m], en[m])
            # z = (dp + lam dvn)/s ; vel rows: +(z lam) n_i ; p rows: +z
            lam = lam_m1[m]
            ss = s1[m]
            # d z wrt (b,j): (N_b? ) -> dp: N_b ; dvn: N_b n_j
            Jv[m, :, :2, :, :2] += np.einsum(
                "kq,kqa,kqi,kqb,kqj->kaibj", ew[m] * lam**2 / ss, eN[m], en[m], eN[m], en[m])
            Jv[m, :, :2, :, 2] += np.einsum(
                "kq,kqa,kqi,kqb->kaib", ew[m] * lam / ss, eN[m], en[m], eN[m])
            Jv[m, :, 2, :, :2] += np.einsum(
                "kq,kqa,kqb,kqj->kabj", ew[m] * lam / ss, eN[m], eN[m], en[m])
            Jv[m, :, 2, :, 2] += np.einsum("kq,kqa,kqb->kab", ew[m] / ss, eN[m], eN[m])

    if flg_euler and mode == MODE_STOKES:
        m = wsi
        if m.any():
            Jv[m, :, :2, :, 2] += np.einsum("kq,kqa,kqi,kqb->kaib", ew[m], eN[m], en[m], eN[m])
            Jv[m, :, 2, :, :2] -= np.einsum("kq,kqa,kqb,kqj->kabj", ew[m], eN[m], eN[m], en[m])
        m = out
        if m.any():
            Jv[m, :, 2, :, 2] += np.einsum("kq,kqa,kqb->kab", ew[m] / th[m], eN[m], eN[m])

    if flg_euler and mode == MODE_ALTERNATIVE:
        m = wsi
        if m.any():
            Jv[m, :, :2, :, 2] += np.einsum("kq,kqa,kqi,kqb->kaib", ew[m], eN[m], en[m], eN[m])
            Jv[m, :, 2, :, :2] -= np.einsum("kq,kqa,kqb,kqj->kabj", ew[m], eN[m], eN[m], en[m])
        m = out
        if m.any():
            vel_vel_diag(m, rho * vnf_plus[m])
        m = char
        if m.any():
            Jv[m, :, 2, :, :2] -= np.einsum("kq,kqa,kqb,kqj->kabj", ew[m], eN[m], eN[m], en[m])
            # 0.5 A(u)(u+uD): d[rho vn sv + sp n] and d[svn] rows
            sv = v[m] + (evD[m] if flg_data else 0.0)
            vel_vel_diag(m, 0.5 * rho * vn[m])
            Jv[m, :, :2, :, :2] += 0.5 * rho * np.einsum(
                "kq,kqa,kqc,kqb,kqj->kacbj", ew[m], eN[m], sv, eN[m], en[m])
            Jv[m, :, :2, :, 2] += 0.5 * np.einsum("kq,kqa,kqi,kqb->kaib", ew[m], eN[m], en[m], eN[m])
            Jv[m, :, 2, :, :2] += 0.5 * np.einsum("kq,kqa,kqb,kqj->kabj", ew[m], eN[m], eN[m], en[m])
            # 0.5 |A|fro du . psi
            coef = ew[m] * 0.5 * rho * absvnf[m]
            tang = np.einsum("kq,kqa,kqb->kqab", coef, eN[m], eN[m])
            for i in range(2):
                Jv[m, :, i, :, i] += np.einsum("kqab->kab", tang)
            Jv[m, :, :2, :, :2] -= np.einsum("kqab,kqi,kqj->kaibj", tang, en[m], en[m])
            rv = rho * vnf[m]
            Jv[m, :, :2, :, :2] += 0.5 * np.einsum(
                "kq,kqa,kqi,kqb,kqj->kaibj", ew[m] * (2.0 + rv**2) / s1[m], eN[m], en[m], eN[m], en[m])
            Jv[m, :, :2, :, 2] += 0.5 * np.einsum(
                "kq,kqa,kqi,kqb->kaib", ew[m] * rv / s1[m], eN[m], en[m], eN[m])
            Jv[m, :, 2, :, :2] += 0.5 * np.einsum(
                "kq,kqa,kqb,kqj->kabj", ew[m] * rv / s1[m], eN[m], eN[m], en[m])
            Jv[m, :, 2, :, 2] += 0.5 * np.einsum(
                "kq,kqa,kqb->kab", ew[m] * 2.0 / s1[m], eN[m], eN[m])

    if flg_visc and mu > 0.0:
        m = wall | infl
        if m.any():
            # -dn(dv) N_a - dV (dN_b/dn test and trial mixed) + penalty
            blk1 = np.einsum("kq,kqa,kqb->kab", ew[m] * mu, eN[m], gna[m])
            blk2 = np.einsum("kq,kqa,kqb->kab", ew[m] * mu, gna[m], eN[m])
            pen = np.einsum("kq,kqa,kqb->kab", ew[m] * mu * gamma / edK[m][:, None], eN[m], eN[m])
            for i in range(2):
                Jv[m, :, i, :, i] += -blk1 - blk2 + pen
        m = sym
        if m.any():
            blk1 = np.einsum("kq,kqa,kqi,kqb,kqj->kaibj", ew[m] * mu, eN[m], en[m], gna[m], en[m])
            blk2 = np.einsum("kq,kqa,kqi,kqb,kqj->kaibj", ew[m] * mu, gna[m], en[m], eN[m], en[m])
            pen = np.einsum("kq,kqa,kqi,kqb,kqj->kaibj", ew[m] * mu * gamma / edK[m][:, None], eN[m], en[m], eN[m], en[m])
            Jv[m, :, :2, :, :2] += -blk1 - blk2 + pen
        m = out
        if m.any() and not (mode != MODE_STOKES and outflow_mode == OUT_DO_NOTHING):
            coef = ew[m] * mu / th[m]
            Jv[m, :, 2, :, :2] -= np.einsum("kq,kqa,kqb,kqj->kabj", coef, eN[m], gna[m], en[m])
            Jv[m, :, :2, :, 2] -= np.einsum("kq,kqa,kqi,kqb->kaib", coef, gna[m], en[m], eN[m])
            Jv[m, :, :2, :, :2] += mu * np.einsum(
                "kq,kqa,kqi,kqb,kqj->kaibj", coef, gna[m], en[m], gna[m], en[m])

    return J
