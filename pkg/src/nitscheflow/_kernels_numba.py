"""Numba-compiled assembly kernels (default backend).

Same signatures and identical math as _kernels_numpy; scalar loops over
entities and quadrature points, @njit(cache=True).
"""

import numpy as np
from numba import njit

from ._kernels_numpy import (
    MODE_ALTERNATIVE,
    MODE_BALANCED,
    MODE_STOKES,
    OUT_DO_NOTHING,
    OUT_ENERGY,
    TAG_CHAR,
    TAG_IN,
    TAG_OUT,
    TAG_SYM,
    TAG_WALL,
)


@njit(cache=True)
def _theta_s(rho, vmag, mu, dK, dti, c_dt, c_St):
    return np.sqrt((rho * vmag) ** 2 + (c_dt * rho * dK * dti) ** 2 + (c_St * mu / dK) ** 2)


@njit(cache=True)
def cell_residual(cells, N, grads, wdet, lap, dK,
                  und, ufro, hv, bdf0, bdfh, fq,
                  rho, mu, c_dt, c_St, dti, gamma1, gamma2,
                  flg_time, flg_galerkin, flg_visc, flg_supg, flg_f,
                  mode, flg_lap):
    M, Q = wdet.shape
    nh = hv.shape[0]
    R = np.zeros((M, 4, 3))
    for m in range(M):
        for q in range(Q):
            w = wdet[m, q]
            v0 = 0.0
            v1 = 0.0
            p = 0.0
            g00 = 0.0
            g01 = 0.0
            g10 = 0.0
            g11 = 0.0
            gp0 = 0.0
            gp1 = 0.0
            vf0 = 0.0
            vf1 = 0.0
            vd0 = 0.0
            vd1 = 0.0
            for a in range(4):
                na = cells[m, a]
                Na = N[q, a]
                ga0 = grads[m, q, a, 0]
                ga1 = grads[m, q, a, 1]
                v0 += Na * und[na, 0]
                v1 += Na * und[na, 1]
                p += Na * und[na, 2]
                g00 += ga0 * und[na, 0]
                g01 += ga1 * und[na, 0]
                g10 += ga0 * und[na, 1]
                g11 += ga1 * und[na, 1]
                gp0 += ga0 * und[na, 2]
                gp1 += ga1 * und[na, 2]
                vf0 += Na * ufro[na, 0]
                vf1 += Na * ufro[na, 1]
                if bdf0 != 0.0:
                    vd0 += bdf0 * Na * und[na, 0]
                    vd1 += bdf0 * Na * und[na, 1]
                    for h in range(nh):
                        vd0 += bdfh[h] * Na * hv[h, na, 0]
                        vd1 += bdfh[h] * Na * hv[h, na, 1]
            divv = g00 + g11
            conv0 = v0 * g00 + v1 * g01
            conv1 = v0 * g10 + v1 * g11

            E0 = 0.0
            E1 = 0.0
            g1K = 0.0
            g2K = 0.0
            if flg_supg:
                vmagf = 0.0 if mode == MODE_STOKES else np.sqrt(vf0 * vf0 + vf1 * vf1)
                th = _theta_s(rho, vmagf, mu, dK[m], dti, c_dt, c_St)
                g1K = gamma1 * dK[m] / th
                g2K = gamma2 * dK[m] * th
                E0 = rho * vd0 + gp0
                E1 = rho * vd1 + gp1
                if mode != MODE_STOKES:
                    E0 += rho * conv0
                    E1 += rho * conv1
                if flg_lap and mu > 0.0:
                    lv0 = 0.0
                    lv1 = 0.0
                    for a in range(4):
                        na = cells[m, a]
                        lv0 += lap[m, q, a] * und[na, 0]
                        lv1 += lap[m, q, a] * und[na, 1]
                    E0 -= mu * lv0
                    E1 -= mu * lv1
                if flg_f:
                    E0 -= fq[m, q, 0]
                    E1 -= fq[m, q, 1]

            for a in range(4):
                Na = N[q, a]
                ga0 = grads[m, q, a, 0]
                ga1 = grads[m, q, a, 1]
                vga = v0 * ga0 + v1 * ga1
                if flg_time and bdf0 != 0.0:
                    R[m, a, 0] += w * rho * vd0 * Na
                    R[m, a, 1] += w * rho * vd1 * Na
                if flg_galerkin:
                    if mode == MODE_ALTERNATIVE:
                        R[m, a, 0] += -w * rho * v0 * vga
                        R[m, a, 1] += -w * rho * v1 * vga
                    elif mode != MODE_STOKES:
                        R[m, a, 0] += w * 0.5 * rho * (conv0 * Na - v0 * vga)
                        R[m, a, 1] += w * 0.5 * rho * (conv1 * Na - v1 * vga)
                    R[m, a, 2] += w * divv * Na
                    R[m, a, 0] -= w * p * ga0
                    R[m, a, 1] -= w * p * ga1
                if flg_visc and mu > 0.0:
                    R[m, a, 0] += w * mu * (g00 * ga0 + g01 * ga1)
                    R[m, a, 1] += w * mu * (g10 * ga0 + g11 * ga1)
                if flg_f and flg_galerkin:
                    R[m, a, 0] -= w * fq[m, q, 0] * Na
                    R[m, a, 1] -= w * fq[m, q, 1] * Na
                if flg_supg:
                    vgaf = 0.0 if mode == MODE_STOKES else vf0 * ga0 + vf1 * ga1
                    et = rho * vgaf
                    if flg_lap and mu > 0.0:
                        et -= mu * lap[m, q, a]
                    R[m, a, 0] += w * g1K * E0 * et
                    R[m, a, 1] += w * g1K * E1 * et
                    R[m, a, 2] += w * g1K * (E0 * ga0 + E1 * ga1)
                    R[m, a, 0] += w * g2K * divv * ga0
                    R[m, a, 1] += w * g2K * divv * ga1
    return R


@njit(cache=True)
def cell_jacobian(cells, N, grads, wdet, lap, dK,
                  und, ufro, hv, bdf0, bdfh, fq,
                  rho, mu, c_dt, c_St, dti, gamma1, gamma2,
                  flg_time, flg_galerkin, flg_visc, flg_supg, flg_f,
                  mode, flg_lap):
    M, Q = wdet.shape
    J = np.zeros((M, 12, 12))
    for m in range(M):
        for q in range(Q):
            w = wdet[m, q]
            v0 = 0.0
            v1 = 0.0
            g00 = 0.0
            g01 = 0.0
            g10 = 0.0
            g11 = 0.0
            vf0 = 0.0
            vf1 = 0.0
            for a in range(4):
                na = cells[m, a]
                Na = N[q, a]
                ga0 = grads[m, q, a, 0]
                ga1 = grads[m, q, a, 1]
                v0 += Na * und[na, 0]
                v1 += Na * und[na, 1]
                g00 += ga0 * und[na, 0]
                g01 += ga1 * und[na, 0]
                g10 += ga0 * und[na, 1]
                g11 += ga1 * und[na, 1]
                vf0 += Na * ufro[na, 0]
                vf1 += Na * ufro[na, 1]
            gradv = ((g00, g01), (g10, g11))
            g1K = 0.0
            g2K = 0.0
            if flg_supg:
                vmagf = 0.0 if mode == MODE_STOKES else np.sqrt(vf0 * vf0 + vf1 * vf1)
                th = _theta_s(rho, vmagf, mu, dK[m], dti, c_dt, c_St)
                g1K = gamma1 * dK[m] / th
                g2K = gamma2 * dK[m] * th

            for a in range(4):
                Na = N[q, a]
                ga0 = grads[m, q, a, 0]
                ga1 = grads[m, q, a, 1]
                vga = v0 * ga0 + v1 * ga1
                vgaf = 0.0 if mode == MODE_STOKES else vf0 * ga0 + vf1 * ga1
                eta = rho * vgaf
                if flg_lap and mu > 0.0:
                    eta -= mu * lap[m, q, a]
                for b in range(4):
                    nbq = N[q, b]
                    gb0 = grads[m, q, b, 0]
                    gb1 = grads[m, q, b, 1]
                    vgb = v0 * gb0 + v1 * gb1
                    if flg_time and bdf0 != 0.0:
                        blk = w * rho * bdf0 * Na * nbq
                        J[m, a * 3 + 0, b * 3 + 0] += blk
                        J[m, a * 3 + 1, b * 3 + 1] += blk
                    if flg_galerkin:
                        if mode == MODE_ALTERNATIVE:
                            t3 = w * rho * nbq * vga
                            J[m, a * 3 + 0, b * 3 + 0] += -t3
                            J[m, a * 3 + 1, b * 3 + 1] += -t3
                            for i in range(2):
                                vi = v0 if i == 0 else v1
                                for j in range(2):
                                    gaj = ga0 if j == 0 else ga1
                                    J[m, a * 3 + i, b * 3 + j] += -w * rho * vi * nbq * gaj
                        elif mode != MODE_STOKES:
                            for i in range(2):
                                vi = v0 if i == 0 else v1
                                for j in range(2):
                                    gaj = ga0 if j == 0 else ga1
                                    J[m, a * 3 + i, b * 3 + j] += 0.5 * rho * w * (
                                        Na * nbq * gradv[i][j] - vi * nbq * gaj)
                            diag = 0.5 * rho * w * (Na * vgb - nbq * vga)
                            J[m, a * 3 + 0, b * 3 + 0] += diag
                            J[m, a * 3 + 1, b * 3 + 1] += diag
                        # chi div dv ; -dp div phi
                        J[m, a * 3 + 2, b * 3 + 0] += w * Na * gb0
                        J[m, a * 3 + 2, b * 3 + 1] += w * Na * gb1
                        J[m, a * 3 + 0, b * 3 + 2] -= w * nbq * ga0
                        J[m, a * 3 + 1, b * 3 + 2] -= w * nbq * ga1
                    if flg_visc and mu > 0.0:
                        blk = w * mu * (ga0 * gb0 + ga1 * gb1)
                        J[m, a * 3 + 0, b * 3 + 0] += blk
                        J[m, a * 3 + 1, b * 3 + 1] += blk
                    if flg_supg:
                        # dE columns for velocity dof (b, j) and pressure dof b
                        for j in range(2):
                            dE0 = 0.0
                            dE1 = 0.0
                            if bdf0 != 0.0:
                                if j == 0:
                                    dE0 += rho * bdf0 * nbq
                                else:
                                    dE1 += rho * bdf0 * nbq
                            if mode != MODE_STOKES:
                                dE0 += rho * nbq * gradv[0][j]
                                dE1 += rho * nbq * gradv[1][j]
                                if j == 0:
                                    dE0 += rho * vgb
                                else:
                                    dE1 += rho * vgb
                            if flg_lap and mu > 0.0:
                                if j == 0:
                                    dE0 -= mu * lap[m, q, b]
                                else:
                                    dE1 -= mu * lap[m, q, b]
                            J[m, a * 3 + 0, b * 3 + j] += w * g1K * eta * dE0
                            J[m, a * 3 + 1, b * 3 + j] += w * g1K * eta * dE1
                            J[m, a * 3 + 2, b * 3 + j] += w * g1K * (ga0 * dE0 + ga1 * dE1)
                        # pressure dof: dE = g_b
                        J[m, a * 3 + 0, b * 3 + 2] += w * g1K * eta * gb0
                        J[m, a * 3 + 1, b * 3 + 2] += w * g1K * eta * gb1
                        J[m, a * 3 + 2, b * 3 + 2] += w * g1K * (ga0 * gb0 + ga1 * gb1)
                        # grad-div
                        for i in range(2):
                            gai = ga0 if i == 0 else ga1
                            for j in range(2):
                                gbj = gb0 if j == 0 else gb1
                                J[m, a * 3 + i, b * 3 + j] += w * g2K * gbj * gai
    return J


@njit(cache=True)
def _lam_m(rho_vn, th):
    s = np.sqrt(4.0 * th * th + rho_vn * rho_vn)
    big = 0.5 * (abs(rho_vn) + s)
    if rho_vn >= 0.0:
        return -(th * th) / big, s
    return -big, s


@njit(cache=True)
def edge_residual(ecn, eN, egrads, ew, en, edK, etag,
                  und, ufro, evD, epD,
                  rho, mu, c_dt, c_St, dti, gamma,
                  mode, outflow_mode, char_unit,
                  flg_euler, flg_visc, flg_data):
    K, Qe = ew.shape
    R = np.zeros((K, 4, 3))
    for k in range(K):
        tag = etag[k]
        for q in range(Qe):
            w = ew[k, q]
            n0 = en[k, q, 0]
            n1 = en[k, q, 1]
            v0 = 0.0
            v1 = 0.0
            p = 0.0
            vf0 = 0.0
            vf1 = 0.0
            d00 = 0.0
            d01 = 0.0
            d10 = 0.0
            d11 = 0.0
            for a in range(4):
                na = ecn[k, a]
                Na = eN[k, q, a]
                ga0 = egrads[k, q, a, 0]
                ga1 = egrads[k, q, a, 1]
                v0 += Na * und[na, 0]
                v1 += Na * und[na, 1]
                p += Na * und[na, 2]
                vf0 += Na * ufro[na, 0]
                vf1 += Na * ufro[na, 1]
                d00 += ga0 * und[na, 0]
                d01 += ga1 * und[na, 0]
                d10 += ga0 * und[na, 1]
                d11 += ga1 * und[na, 1]
            vn = v0 * n0 + v1 * n1
            vnf = vf0 * n0 + vf1 * n1
            vmagf = 0.0 if mode == MODE_STOKES else np.sqrt(vf0 * vf0 + vf1 * vf1)
            th = _theta_s(rho, vmagf, mu, edK[k], dti, c_dt, c_St)
            dnv0 = d00 * n0 + d01 * n1
            dnv1 = d10 * n0 + d11 * n1
            dnvn = dnv0 * n0 + dnv1 * n1
            vD0 = evD[k, q, 0] if flg_data else 0.0
            vD1 = evD[k, q, 1] if flg_data else 0.0
            pD = epD[k, q] if flg_data else 0.0
            vDn = vD0 * n0 + vD1 * n1

            lam, s = _lam_m(rho * vnf, th)
            alpha = (4.0 * th * th / (rho * abs(vnf) + s)) ** 2 / (4.0 * s)
            vnf_m = min(vnf, 0.0)
            vnf_p = max(vnf, 0.0)
            if char_unit:
                lam1, s1 = _lam_m(rho * vnf, 1.0)
            else:
                lam1, s1 = lam, s

            if flg_euler and mode == MODE_BALANCED:
                if tag == TAG_WALL or tag == TAG_IN or tag == TAG_SYM:
                    c_v0 = 0.5 * rho * abs(vnf) * v0 + (alpha * vn + p) * n0
                    c_v1 = 0.5 * rho * abs(vnf) * v1 + (alpha * vn + p) * n1
                    c_p = -vn
                    if tag == TAG_IN:
                        c_v0 += rho * vnf_m * vD0 - alpha * vDn * n0
                        c_v1 += rho * vnf_m * vD1 - alpha * vDn * n1
                        c_p += vDn
                    for a in range(4):
                        Na = eN[k, q, a]
                        R[k, a, 0] += w * c_v0 * Na
                        R[k, a, 1] += w * c_v1 * Na
                        R[k, a, 2] += w * c_p * Na
                elif tag == TAG_OUT:
                    if outflow_mode == OUT_ENERGY:
                        c_v0 = 0.5 * rho * abs(vnf) * v0 + pD * n0
                        c_v1 = 0.5 * rho * abs(vnf) * v1 + pD * n1
                        c_p = (rho * vnf_m * vn + p - pD) / th
                    else:
                        c_v0 = 0.5 * rho * vn * v0 + pD * n0
                        c_v1 = 0.5 * rho * vn * v1 + pD * n1
                        c_p = 0.0
                    for a in range(4):
                        Na = eN[k, q, a]
                        R[k, a, 0] += w * c_v0 * Na
                        R[k, a, 1] += w * c_v1 * Na
                        R[k, a, 2] += w * c_p * Na
                elif tag == TAG_CHAR:
                    dv0 = v0 - vD0
                    dv1 = v1 - vD1
                    dp = p - pD
                    dvn = dv0 * n0 + dv1 * n1
                    dvt0 = dv0 - dvn * n0
                    dvt1 = dv1 - dvn * n1
                    z = (dp + lam1 * dvn) / s1
                    c_v0 = 0.5 * rho * vn * v0 + p * n0 \
                        - (rho * vnf_m * dvt0 - z * lam1 * n0)
                    c_v1 = 0.5 * rho * vn * v1 + p * n1 \
                        - (rho * vnf_m * dvt1 - z * lam1 * n1)
                    c_p = z
                    for a in range(4):
                        Na = eN[k, q, a]
                        R[k, a, 0] += w * c_v0 * Na
                        R[k, a, 1] += w * c_v1 * Na
                        R[k, a, 2] += w * c_p * Na

            if flg_euler and mode == MODE_STOKES:
                if tag == TAG_WALL or tag == TAG_IN or tag == TAG_SYM:
                    c_p = -vn
                    if tag == TAG_IN:
                        c_p += vDn
                    for a in range(4):
                        Na = eN[k, q, a]
                        R[k, a, 0] += w * p * n0 * Na
                        R[k, a, 1] += w * p * n1 * Na
                        R[k, a, 2] += w * c_p * Na
                elif tag == TAG_OUT:
                    for a in range(4):
                        Na = eN[k, q, a]
                        R[k, a, 0] += w * pD * n0 * Na
                        R[k, a, 1] += w * pD * n1 * Na
                        R[k, a, 2] += w * (p - pD) / th * Na

            if flg_euler and mode == MODE_ALTERNATIVE:
                if tag == TAG_WALL or tag == TAG_IN or tag == TAG_SYM:
                    c_p = -vn
                    if tag == TAG_IN:
                        c_p += vDn  # inflow mass-flux datum of the b-form
                    for a in range(4):
                        Na = eN[k, q, a]
                        R[k, a, 0] += w * p * n0 * Na
                        R[k, a, 1] += w * p * n1 * Na
                        R[k, a, 2] += w * c_p * Na
                elif tag == TAG_OUT:
                    for a in range(4):
                        Na = eN[k, q, a]
                        R[k, a, 0] += w * (rho * vnf_p * v0 + pD * n0) * Na
                        R[k, a, 1] += w * (rho * vnf_p * v1 + pD * n1) * Na
                elif tag == TAG_CHAR:
                    sv0 = v0 + vD0
                    sv1 = v1 + vD1
                    sp = p + pD
                    svn = sv0 * n0 + sv1 * n1
                    dv0 = v0 - vD0
                    dv1 = v1 - vD1
                    dp = p - pD
                    dvn = dv0 * n0 + dv1 * n1
                    dvt0 = dv0 - dvn * n0
                    dvt1 = dv1 - dvn * n1
                    c1 = dp + rho * vnf * dvn
                    c_v0 = 0.5 * (rho * vn * sv0 + sp * n0) + 0.5 * (
                        rho * abs(vnf) * dvt0 + (2.0 * dvn + c1 * rho * vnf) / s1 * n0)
                    c_v1 = 0.5 * (rho * vn * sv1 + sp * n1) + 0.5 * (
                        rho * abs(vnf) * dvt1 + (2.0 * dvn + c1 * rho * vnf) / s1 * n1)
                    c_p = -vn + 0.5 * svn + 0.5 * (dp + c1) / s1
                    for a in range(4):
                        Na = eN[k, q, a]
                        R[k, a, 0] += w * c_v0 * Na
                        R[k, a, 1] += w * c_v1 * Na
                        R[k, a, 2] += w * c_p * Na

            if flg_visc and mu > 0.0:
                if tag == TAG_WALL or tag == TAG_IN:
                    vd0 = v0 - (vD0 if tag == TAG_IN else 0.0)
                    vd1 = v1 - (vD1 if tag == TAG_IN else 0.0)
                    for a in range(4):
                        Na = eN[k, q, a]
                        gna = egrads[k, q, a, 0] * n0 + egrads[k, q, a, 1] * n1
                        R[k, a, 0] += w * mu * ((-dnv0 + gamma / edK[k] * vd0) * Na - vd0 * gna)
                        R[k, a, 1] += w * mu * ((-dnv1 + gamma / edK[k] * vd1) * Na - vd1 * gna)
                elif tag == TAG_SYM:
                    for a in range(4):
                        Na = eN[k, q, a]
                        gna = egrads[k, q, a, 0] * n0 + egrads[k, q, a, 1] * n1
                        c = (-dnvn + gamma / edK[k] * vn) * Na - vn * gna
                        R[k, a, 0] += w * mu * c * n0
                        R[k, a, 1] += w * mu * c * n1
                elif tag == TAG_OUT:
                    if not (mode != MODE_STOKES and outflow_mode == OUT_DO_NOTHING):
                        for a in range(4):
                            Na = eN[k, q, a]
                            gna = egrads[k, q, a, 0] * n0 + egrads[k, q, a, 1] * n1
                            R[k, a, 2] += -w * mu * dnvn / th * Na
                            c = (-mu * (p - pD) / th + mu * mu * dnvn / th) * gna
                            R[k, a, 0] += w * c * n0
                            R[k, a, 1] += w * c * n1
    return R


@njit(cache=True)
def edge_jacobian(ecn, eN, egrads, ew, en, edK, etag,
                  und, ufro, evD, epD,
                  rho, mu, c_dt, c_St, dti, gamma,
                  mode, outflow_mode, char_unit,
                  flg_euler, flg_visc, flg_data):
    K, Qe = ew.shape
    J = np.zeros((K, 12, 12))
    for k in range(K):
        tag = etag[k]
        for q in range(Qe):
            w = ew[k, q]
            n0 = en[k, q, 0]
            n1 = en[k, q, 1]
            nvec = (n0, n1)
            v0 = 0.0
            v1 = 0.0
            vf0 = 0.0
            vf1 = 0.0
            for a in range(4):
                na = ecn[k, a]
                Na = eN[k, q, a]
                v0 += Na * und[na, 0]
                v1 += Na * und[na, 1]
                vf0 += Na * ufro[na, 0]
                vf1 += Na * ufro[na, 1]
            vv = (v0, v1)
            vn = v0 * n0 + v1 * n1
            vnf = vf0 * n0 + vf1 * n1
            vmagf = 0.0 if mode == MODE_STOKES else np.sqrt(vf0 * vf0 + vf1 * vf1)
            th = _theta_s(rho, vmagf, mu, edK[k], dti, c_dt, c_St)
            lam, s = _lam_m(rho * vnf, th)
            alpha = (4.0 * th * th / (rho * abs(vnf) + s)) ** 2 / (4.0 * s)
            vnf_m = min(vnf, 0.0)
            vnf_p = max(vnf, 0.0)
            if char_unit:
                lam1, s1 = _lam_m(rho * vnf, 1.0)
            else:
                lam1, s1 = lam, s
            vD0 = evD[k, q, 0] if flg_data else 0.0
            vD1 = evD[k, q, 1] if flg_data else 0.0
            svv = (v0 + vD0, v1 + vD1)

            for a in range(4):
                Na = eN[k, q, a]
                gna = egrads[k, q, a, 0] * n0 + egrads[k, q, a, 1] * n1
                for b in range(4):
                    Nb = eN[k, q, b]
                    gnb = egrads[k, q, b, 0] * n0 + egrads[k, q, b, 1] * n1
                    NN = w * Na * Nb

                    if flg_euler and mode == MODE_BALANCED:
                        if tag == TAG_WALL or tag == TAG_IN or tag == TAG_SYM:
                            for i in range(2):
                                J[k, a * 3 + i, b * 3 + i] += 0.5 * rho * abs(vnf) * NN
                                for j in range(2):
                                    J[k, a * 3 + i, b * 3 + j] += alpha * NN * nvec[i] * nvec[j]
                                J[k, a * 3 + i, b * 3 + 2] += NN * nvec[i]
                                J[k, a * 3 + 2, b * 3 + i] -= NN * nvec[i]
                        elif tag == TAG_OUT:
                            if outflow_mode == OUT_ENERGY:
                                for i in range(2):
                                    J[k, a * 3 + i, b * 3 + i] += 0.5 * rho * abs(vnf) * NN
                                    J[k, a * 3 + 2, b * 3 + i] += rho * vnf_m / th * NN * nvec[i]
                                J[k, a * 3 + 2, b * 3 + 2] += NN / th
                            else:
                                for i in range(2):
                                    J[k, a * 3 + i, b * 3 + i] += 0.5 * rho * vn * NN
                                    for j in range(2):
                                        J[k, a * 3 + i, b * 3 + j] += 0.5 * rho * vv[i] * NN * nvec[j]
                        elif tag == TAG_CHAR:
                            for i in range(2):
                                J[k, a * 3 + i, b * 3 + i] += 0.5 * rho * vn * NN
                                for j in range(2):
                                    J[k, a * 3 + i, b * 3 + j] += 0.5 * rho * vv[i] * NN * nvec[j]
                                J[k, a * 3 + i, b * 3 + 2] += NN * nvec[i]
                            # -(A^-)fro du.psi
                            for i in range(2):
                                J[k, a * 3 + i, b * 3 + i] -= rho * vnf_m * NN
                                for j in range(2):
                                    J[k, a * 3 + i, b * 3 + j] += (
                                        rho * vnf_m + lam1 * lam1 / s1) * NN * nvec[i] * nvec[j]
                                J[k, a * 3 + i, b * 3 + 2] += lam1 / s1 * NN * nvec[i]
                                J[k, a * 3 + 2, b * 3 + i] += lam1 / s1 * NN * nvec[i]
                            J[k, a * 3 + 2, b * 3 + 2] += NN / s1

                    if flg_euler and mode == MODE_STOKES:
                        if tag == TAG_WALL or tag == TAG_IN or tag == TAG_SYM:
                            for i in range(2):
                                J[k, a * 3 + i, b * 3 + 2] += NN * nvec[i]
                                J[k, a * 3 + 2, b * 3 + i] -= NN * nvec[i]
                        elif tag == TAG_OUT:
                            J[k, a * 3 + 2, b * 3 + 2] += NN / th

                    if flg_euler and mode == MODE_ALTERNATIVE:
                        if tag == TAG_WALL or tag == TAG_IN or tag == TAG_SYM:
                            for i in range(2):
                                J[k, a * 3 + i, b * 3 + 2] += NN * nvec[i]
                                J[k, a * 3 + 2, b * 3 + i] -= NN * nvec[i]
                        elif tag == TAG_OUT:
                            for i in range(2):
                                J[k, a * 3 + i, b * 3 + i] += rho * vnf_p * NN
                        elif tag == TAG_CHAR:
                            rv = rho * vnf
                            for i in range(2):
                                J[k, a * 3 + 2, b * 3 + i] -= NN * nvec[i]
                                # 0.5 A(u)(u+uD)
                                J[k, a * 3 + i, b * 3 + i] += 0.5 * rho * vn * NN
                                for j in range(2):
                                    J[k, a * 3 + i, b * 3 + j] += 0.5 * rho * svv[i] * NN * nvec[j]
                                J[k, a * 3 + i, b * 3 + 2] += 0.5 * NN * nvec[i]
                                J[k, a * 3 + 2, b * 3 + i] += 0.5 * NN * nvec[i]
                                # 0.5 |A|fro du
                                J[k, a * 3 + i, b * 3 + i] += 0.5 * rho * abs(vnf) * NN
                                for j in range(2):
                                    J[k, a * 3 + i, b * 3 + j] += 0.5 * (
                                        -rho * abs(vnf) + (2.0 + rv * rv) / s1) * NN * nvec[i] * nvec[j]
                                J[k, a * 3 + i, b * 3 + 2] += 0.5 * rv / s1 * NN * nvec[i]
                                J[k, a * 3 + 2, b * 3 + i] += 0.5 * rv / s1 * NN * nvec[i]
                            J[k, a * 3 + 2, b * 3 + 2] += 0.5 * 2.0 / s1 * NN

                    if flg_visc and mu > 0.0:
                        if tag == TAG_WALL or tag == TAG_IN:
                            blk = w * mu * (-Na * gnb - gna * Nb + gamma / edK[k] * Na * Nb)
                            J[k, a * 3 + 0, b * 3 + 0] += blk
                            J[k, a * 3 + 1, b * 3 + 1] += blk
                        elif tag == TAG_SYM:
                            blk = w * mu * (-Na * gnb - gna * Nb + gamma / edK[k] * Na * Nb)
                            for i in range(2):
                                for j in range(2):
                                    J[k, a * 3 + i, b * 3 + j] += blk * nvec[i] * nvec[j]
                        elif tag == TAG_OUT:
                            if not (mode != MODE_STOKES and outflow_mode == OUT_DO_NOTHING):
                                cth = w * mu / th
                                J[k, a * 3 + 2, b * 3 + 0] -= cth * Na * gnb * n0
                                J[k, a * 3 + 2, b * 3 + 1] -= cth * Na * gnb * n1
                                J[k, a * 3 + 0, b * 3 + 2] -= cth * gna * n0 * Nb
                                J[k, a * 3 + 1, b * 3 + 2] -= cth * gna * n1 * Nb
                                for i in range(2):
                                    for j in range(2):
                                        J[k, a * 3 + i, b * 3 + j] += mu * cth * gna * gnb * nvec[i] * nvec[j]
    return J
