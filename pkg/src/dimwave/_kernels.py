"""Fused numerical kernels (numba-accelerated when available).

The Picard sweep is the hot loop of the solver: per space-time node it
needs the x/y gradients of nine evolved components, the quasilinear
products, and the (N+1)x(N+1) time solve.  The fused kernel performs all
of it in a single pass per cell; a pure-numpy fallback (predictor module)
covers environments without numba.
"""

from __future__ import annotations

import numpy as np

try:
    import numba
    from numba import njit, prange
    numba.config.THREADING_LAYER = "workqueue"
    HAVE_NUMBA = True
except ImportError:                                       # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def deco(f):
            return f
        return deco

    prange = range


@njit(parallel=True, cache=True)
def roe_fluctuations(qL, qR, nodes, comp_nodes, weights, eps0,
                     nv, ns, on1, on2, sv1, ss1, sv2, ss2,
                     rusanov, dm, dp, smax):
    """Fused path-conservative fluctuations for one axis.

    qL, qR: (np, 13) face states (not modified); nodes/comp_nodes/weights:
    the segment-path quadrature with comp_nodes = 1 - nodes precomputed
    so reflected faces produce bit-mirrored results.  Writes
    dm = 1/2 (B - |B|)(qR - qL), dp = 1/2 (B + |B|)(qR - qL) and the
    maximum signal speed into the output arrays.

    The accumulation pairs symmetric quadrature nodes so that mirrored
    input pairs yield exactly mirrored fluctuations.
    """
    n_pts = qL.shape[0]
    ng = nodes.shape[0]
    for i in prange(n_pts):
        aL = qL[i, 12]
        aR = qR[i, 12]
        if aL < 0.0:
            aL = 0.0
        elif aL > 1.0:
            aL = 1.0
        if aR < 0.0:
            aR = 0.0
        elif aR > 1.0:
            aR = 1.0
        for k in range(13):
            dm[i, k] = 0.0
            dp[i, k] = 0.0
        if aL <= eps0 and aR <= eps0:
            smax[i] = 0.0
            continue
        # vacuum sanitation: below the regularization floor the side
        # carries no physical perturbation (stresses or momenta)
        ql = np.empty(13)
        qr = np.empty(13)
        for k in range(13):
            ql[k] = qL[i, k]
            qr[k] = qR[i, k]
        ql[12] = aL
        qr[12] = aR
        if aL <= eps0:
            for k in range(9):
                ql[k] = 0.0
        if aR <= eps0:
            for k in range(9):
                qr[k] = 0.0

        # path integrals, symmetric pair accumulation
        a1 = a2 = a3 = ee = cn = cl = c1 = c2 = gn = g1 = g2v = 0.0
        for half in range((ng + 1) // 2):
            for idx in range(2):
                g = half if idx == 0 else ng - 1 - half
                if idx == 1 and g == half:
                    break
                s = nodes[g]
                cs_ = comp_nodes[g]
                w = weights[g]
                a = cs_ * aL + s * aR
                lamv = cs_ * ql[9] + s * qr[9]
                muv = cs_ * ql[10] + s * qr[10]
                rhov = cs_ * ql[11] + s * qr[11]
                kpv = lamv + 2.0 * muv
                den = a * a + eps0 * (1.0 - a)
                gg = 1.0 / den
                io = a * gg
                ri = 1.0 / rhov
                mnv = cs_ * ql[nv] + s * qr[nv]
                m1 = cs_ * ql[sv1] + s * qr[sv1]
                m2 = cs_ * ql[sv2] + s * qr[sv2]
                sn = cs_ * ql[ns] + s * qr[ns]
                s1 = cs_ * ql[ss1] + s * qr[ss1]
                s2 = cs_ * ql[ss2] + s * qr[ss2]
                a1 += w * io * kpv
                a2 += w * io * lamv
                a3 += w * io * muv
                ee += w * a * ri
                cn += w * kpv * mnv * gg
                cl += w * lamv * mnv * gg
                c1 += w * muv * m1 * gg
                c2 += w * muv * m2 * gg
                gn += w * sn * ri
                g1 += w * s1 * ri
                g2v += w * s2 * ri

        d_ns = qr[ns] - ql[ns]
        d_s1 = qr[ss1] - ql[ss1]
        d_s2 = qr[ss2] - ql[ss2]
        d_nv = qr[nv] - ql[nv]
        d_m1 = qr[sv1] - ql[sv1]
        d_m2 = qr[sv2] - ql[sv2]
        d_al = aR - aL
        d_on1 = qr[on1] - ql[on1]
        d_on2 = qr[on2] - ql[on2]

        b_ns = -a1 * d_nv + cn * d_al
        b_on = -a2 * d_nv + cl * d_al
        b_s1 = -a3 * d_m1 + c1 * d_al
        b_s2 = -a3 * d_m2 + c2 * d_al
        b_nv = -ee * d_ns - gn * d_al
        b_m1 = -ee * d_s1 - g1 * d_al
        b_m2 = -ee * d_s2 - g2v * d_al

        if rusanov:
            cpL = (ql[9] + 2.0 * ql[10]) / ql[11]
            cpR = (qr[9] + 2.0 * qr[10]) / qr[11]
            fL = aL / np.sqrt(aL * aL + eps0 * (1.0 - aL))
            fR = aR / np.sqrt(aR * aR + eps0 * (1.0 - aR))
            sL = fL * np.sqrt(cpL)
            sR = fR * np.sqrt(cpR)
            sm = sL if sL > sR else sR
            smax[i] = sm
            dm[i, ns] = 0.5 * (b_ns - sm * d_ns)
            dp[i, ns] = 0.5 * (b_ns + sm * d_ns)
            dm[i, on1] = 0.5 * (b_on - sm * d_on1)
            dp[i, on1] = 0.5 * (b_on + sm * d_on1)
            dm[i, on2] = 0.5 * (b_on - sm * d_on2)
            dp[i, on2] = 0.5 * (b_on + sm * d_on2)
            dm[i, ss1] = 0.5 * (b_s1 - sm * d_s1)
            dp[i, ss1] = 0.5 * (b_s1 + sm * d_s1)
            dm[i, ss2] = 0.5 * (b_s2 - sm * d_s2)
            dp[i, ss2] = 0.5 * (b_s2 + sm * d_s2)
            dm[i, nv] = 0.5 * (b_nv - sm * d_nv)
            dp[i, nv] = 0.5 * (b_nv + sm * d_nv)
            dm[i, sv1] = 0.5 * (b_m1 - sm * d_m1)
            dp[i, sv1] = 0.5 * (b_m1 + sm * d_m1)
            dm[i, sv2] = 0.5 * (b_m2 - sm * d_m2)
            dp[i, sv2] = 0.5 * (b_m2 + sm * d_m2)
            # remaining stress component, material rows and alpha
            for k in range(13):
                if (k != ns and k != on1 and k != on2 and k != ss1 and k != ss2
                        and k != nv and k != sv1 and k != sv2):
                    dd = d_al if k == 12 else qr[k] - ql[k]
                    dm[i, k] = -0.5 * sm * dd
                    dp[i, k] = 0.5 * sm * dd
            continue

        cp = np.sqrt(a1 * ee)
        cs = np.sqrt(a3 * ee)
        e_inv = 1.0 / ee if ee > 0.0 else 0.0
        rn = cn / a1 if a1 > 0.0 else 0.0
        r1 = c1 / a3 if a3 > 0.0 else 0.0
        r2 = c2 / a3 if a3 > 0.0 else 0.0
        ratio = a2 / a1 if a1 > 0.0 else 0.0
        xs_n = d_ns + d_al * gn * e_inv
        xs_1 = d_s1 + d_al * g1 * e_inv
        xs_2 = d_s2 + d_al * g2v * e_inv
        xm_n = d_nv - d_al * rn
        xm_1 = d_m1 - d_al * r1
        xm_2 = d_m2 - d_al * r2

        dm[i, ns] = 0.5 * (b_ns - cp * xs_n)
        dp[i, ns] = 0.5 * (b_ns + cp * xs_n)
        ab_on = ratio * cp * xs_n
        dm[i, on1] = 0.5 * (b_on - ab_on)
        dp[i, on1] = 0.5 * (b_on + ab_on)
        dm[i, on2] = dm[i, on1]
        dp[i, on2] = dp[i, on1]
        dm[i, ss1] = 0.5 * (b_s1 - cs * xs_1)
        dp[i, ss1] = 0.5 * (b_s1 + cs * xs_1)
        dm[i, ss2] = 0.5 * (b_s2 - cs * xs_2)
        dp[i, ss2] = 0.5 * (b_s2 + cs * xs_2)
        dm[i, nv] = 0.5 * (b_nv - cp * xm_n)
        dp[i, nv] = 0.5 * (b_nv + cp * xm_n)
        dm[i, sv1] = 0.5 * (b_m1 - cs * xm_1)
        dp[i, sv1] = 0.5 * (b_m1 + cs * xm_1)
        dm[i, sv2] = 0.5 * (b_m2 - cs * xm_2)
        dp[i, sv2] = 0.5 * (b_m2 + cs * xm_2)
        smax[i] = cp


@njit(parallel=True, cache=True)
def picard_sweep(q, u, iota, g2, alpha, lam, mu, kpp, rinv, gax, gay,
                 Dm, ihx, ihy, T1inv, at0, wdt, src, src_cell, out):
    """One Picard sweep of the space-time predictor (2D, 13 components).

    q, out : (nc, nx, ny, nt, 13) current / next space-time coefficients
    u      : (nc, nx, ny, 13) states at t^n
    factor arrays : (nc, nx, ny) static material/alpha data
    gax, gay : static alpha gradients, already divided by h
    Dm : (n, n) nodal differentiation matrix; ihx/ihy : (nc,) 1/h
    T1inv : (nt, nt) inverse time operator; at0 : (nt,) phi(0); wdt = dt*w
    src : (nx, ny, nt, 13) nodal source of cell src_cell (or src_cell < 0)
    """
    nc, nx, ny, nt, _ = q.shape
    for c in prange(nc):
        rhs = np.empty((nt, 9))
        for a in range(nx):
            for b in range(ny):
                for t in range(nt):
                    gx0 = gx3 = gx5 = gx6 = gx7 = gx8 = 0.0
                    for j in range(nx):
                        d = Dm[a, j]
                        gx0 += d * q[c, j, b, t, 0]
                        gx3 += d * q[c, j, b, t, 3]
                        gx5 += d * q[c, j, b, t, 5]
                        gx6 += d * q[c, j, b, t, 6]
                        gx7 += d * q[c, j, b, t, 7]
                        gx8 += d * q[c, j, b, t, 8]
                    gy1 = gy3 = gy4 = gy6 = gy7 = gy8 = 0.0
                    for j in range(ny):
                        d = Dm[b, j]
                        gy1 += d * q[c, a, j, t, 1]
                        gy3 += d * q[c, a, j, t, 3]
                        gy4 += d * q[c, a, j, t, 4]
                        gy6 += d * q[c, a, j, t, 6]
                        gy7 += d * q[c, a, j, t, 7]
                        gy8 += d * q[c, a, j, t, 8]
                    hx = ihx[c]
                    hy = ihy[c]
                    gx0 *= hx; gx3 *= hx; gx5 *= hx
                    gx6 *= hx; gx7 *= hx; gx8 *= hx
                    gy1 *= hy; gy3 *= hy; gy4 *= hy
                    gy6 *= hy; gy7 *= hy; gy8 *= hy

                    io = iota[c, a, b]
                    gg = g2[c, a, b]
                    al = alpha[c, a, b]
                    lm = lam[c, a, b]
                    mm = mu[c, a, b]
                    kp = kpp[c, a, b]
                    ri = rinv[c, a, b]
                    ax = gax[c, a, b]
                    ay = gay[c, a, b]

                    q0 = q[c, a, b, t, 0]
                    q1 = q[c, a, b, t, 1]
                    q3 = q[c, a, b, t, 3]
                    q4 = q[c, a, b, t, 4]
                    q5 = q[c, a, b, t, 5]
                    q6 = q[c, a, b, t, 6]
                    q7 = q[c, a, b, t, 7]
                    q8 = q[c, a, b, t, 8]

                    tx = -io * gx6 + gg * q6 * ax
                    ty = -io * gy7 + gg * q7 * ay
                    rhs[t, 0] = kp * tx + lm * ty
                    rhs[t, 1] = lm * tx + kp * ty
                    rhs[t, 2] = lm * (tx + ty)
                    rhs[t, 3] = mm * (-io * gx7 + gg * q7 * ax) \
                        + mm * (-io * gy6 + gg * q6 * ay)
                    rhs[t, 4] = mm * (-io * gy8 + gg * q8 * ay)
                    rhs[t, 5] = mm * (-io * gx8 + gg * q8 * ax)
                    rhs[t, 6] = -ri * (al * gx0 + q0 * ax) - ri * (al * gy3 + q3 * ay)
                    rhs[t, 7] = -ri * (al * gx3 + q3 * ax) - ri * (al * gy1 + q1 * ay)
                    rhs[t, 8] = -ri * (al * gx5 + q5 * ax) - ri * (al * gy4 + q4 * ay)

                if c == src_cell:
                    for t in range(nt):
                        for k in range(9):
                            rhs[t, k] -= src[a, b, t, k]
                for t in range(nt):
                    for k in range(9):
                        rhs[t, k] = at0[t] * u[c, a, b, k] - wdt[t] * rhs[t, k]
                for t in range(nt):
                    for k in range(9):
                        acc = 0.0
                        for l in range(nt):
                            acc += T1inv[t, l] * rhs[l, k]
                        out[c, a, b, t, k] = acc
                    for k in range(9, 13):
                        out[c, a, b, t, k] = u[c, a, b, k]
    return out
