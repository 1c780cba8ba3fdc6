# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled page energy kernel. Same contract as ``_pykernel.evaluate``."""
import numpy as np

from libc.math cimport atan2, cos, exp, fabs, log, log1p, sin, sqrt, tanh

NPRM = 25

cdef double LOG2 = log(2.0)


cdef inline double _logcosh(double x) nogil:
    cdef double ax = fabs(x)
    return ax + log1p(exp(-2.0 * ax)) - LOG2


def evaluate(double[::1] phi, double[::1] prm, double[::1] sup_cap, double[::1] sup_anchor,
             double[::1] gx, double[::1] gw, grad=None, hess=None):
    cdef bint want = grad is not None
    cdef Py_ssize_t nseg = phi.shape[0]
    cdef Py_ssize_t n = nseg + 1
    cdef Py_ssize_t nq = gx.shape[0]
    cdef double sy = prm[0], sz = prm[1], s_ang = prm[2], ell = prm[3], ei = prm[4]
    cdef double wgt = prm[5], ksup = prm[6], dslip = prm[7]
    cdef double kj = ei / ell
    cdef double kb = 2.0 * kj * prm[22]
    cdef Py_ssize_t i, j, k, m, q, a_, b_
    cdef double energy = 0.0, d, t, w, u, za, zb, lo, hi, span

    xa = np.empty((n, 2))
    cdef double[:, ::1] x = xa
    cphi_a = np.empty(nseg)
    sphi_a = np.empty(nseg)
    dphi_a = np.empty(nseg)
    cdef double[::1] cphi = cphi_a, sphi = sphi_a, dphi = dphi_a
    Ga = np.zeros((n, 2))
    cdef double[:, ::1] G = Ga
    Ha = np.zeros((n, n, 2, 2)) if want else np.zeros((1, 1, 2, 2))
    cdef double[:, :, :, ::1] H = Ha
    nodew_a = np.empty(n)
    cdef double[::1] nodew = nodew_a

    x[0, 0] = sy
    x[0, 1] = sz
    for i in range(nseg):
        cphi[i] = cos(phi[i])
        sphi[i] = sin(phi[i])
        x[i + 1, 0] = x[i, 0] + ell * cphi[i]
        x[i + 1, 1] = x[i, 1] + ell * sphi[i]
        dphi[i] = phi[i] - (s_ang if i == 0 else phi[i - 1])
        energy += 0.5 * (kb if i == 0 else kj) * dphi[i] * dphi[i]

    for j in range(n):
        nodew[j] = wgt * ell
    nodew[0] *= 0.5
    nodew[n - 1] *= 0.5
    for j in range(n):
        energy += nodew[j] * x[j, 1]
        G[j, 1] += nodew[j]
    energy -= prm[23] * x[n - 1, 0] + prm[24] * x[n - 1, 1]
    G[n - 1, 0] -= prm[23]
    G[n - 1, 1] -= prm[24]

    # support penalty
    cdef double ga, gb, haa, hab, hbb
    for i in range(nseg):
        za = x[i, 1]
        zb = x[i + 1, 1]
        if not (za < 0.0 or zb < 0.0):
            continue
        lo = 0.0
        hi = 1.0
        if za >= 0.0:
            lo = za / (za - zb)
        elif zb >= 0.0:
            hi = za / (za - zb)
        span = hi - lo
        if span <= 0.0:
            continue
        ga = gb = haa = hab = hbb = 0.0
        for q in range(nq):
            t = lo + span * gx[q]
            w = span * gw[q] * ell * ksup
            u = -(za + t * (zb - za))
            energy += 0.5 * w * u * u
            ga += w * u * (1.0 - t)
            gb += w * u * t
            haa += w * (1.0 - t) * (1.0 - t)
            hab += w * (1.0 - t) * t
            hbb += w * t * t
        G[i, 1] -= ga
        G[i + 1, 1] -= gb
        if want:
            H[i, i, 1, 1] += haa
            H[i, i + 1, 1, 1] += hab
            H[i + 1, i, 1, 1] += hab
            H[i + 1, i + 1, 1, 1] += hbb

    # support friction
    cdef double cap, s, th
    for j in range(1, n):
        cap = sup_cap[j]
        if not cap > 0.0:
            continue
        s = (x[j, 0] - sup_anchor[j]) / dslip
        energy += cap * dslip * _logcosh(s)
        th = tanh(s)
        G[j, 0] += cap * th
        if want:
            H[j, j, 0, 0] += cap / dslip * (1.0 - th * th)

    # fingertip penalty
    cdef double cy, cz, R, ktip, ey, ez, fy, fz, A2, Bq, Cq, disc, sq, ny, nz, vy, vz, r, gpy, gpz
    cdef double nearly, nearz, tt, wd, dr, h00, h01, h11, t0, t1
    if prm[8] > 0.0:
        cy = prm[9]
        cz = prm[10]
        R = prm[11]
        ktip = prm[12]
        for i in range(nseg):
            ey = x[i + 1, 0] - x[i, 0]
            ez = x[i + 1, 1] - x[i, 1]
            fy = x[i, 0] - cy
            fz = x[i, 1] - cz
            tt = -(fy * ey + fz * ez) / (ell * ell)
            if tt < 0.0:
                tt = 0.0
            elif tt > 1.0:
                tt = 1.0
            nearly = fy + tt * ey
            nearz = fz + tt * ez
            if not nearly * nearly + nearz * nearz < R * R:
                continue
            A2 = ey * ey + ez * ez
            Bq = fy * ey + fz * ez
            Cq = fy * fy + fz * fz - R * R
            disc = Bq * Bq - A2 * Cq
            if disc <= 0.0:
                continue
            sq = sqrt(disc)
            lo = (-Bq - sq) / A2
            hi = (-Bq + sq) / A2
            if lo < 0.0:
                lo = 0.0
            if hi > 1.0:
                hi = 1.0
            span = hi - lo
            if span <= 0.0:
                continue
            for q in range(nq):
                t = lo + span * gx[q]
                w = span * gw[q] * ell * ktip
                vy = fy + t * ey
                vz = fz + t * ez
                r = sqrt(vy * vy + vz * vz)
                d = R - r
                energy += 0.5 * w * d * d
                ny = vy / r
                nz = vz / r
                gpy = -w * d * ny
                gpz = -w * d * nz
                G[i, 0] += (1.0 - t) * gpy
                G[i, 1] += (1.0 - t) * gpz
                G[i + 1, 0] += t * gpy
                G[i + 1, 1] += t * gpz
                if want:
                    dr = d / r
                    h00 = w * (ny * ny - dr * (1.0 - ny * ny))
                    h01 = w * (ny * nz + dr * ny * nz)
                    h11 = w * (nz * nz - dr * (1.0 - nz * nz))
                    t0 = 1.0 - t
                    t1 = t
                    _add_block(H, i, i, t0 * t0, h00, h01, h11)
                    _add_block(H, i, i + 1, t0 * t1, h00, h01, h11)
                    _add_block(H, i + 1, i, t0 * t1, h00, h01, h11)
                    _add_block(H, i + 1, i + 1, t1 * t1, h00, h01, h11)

    # fingertip friction at one material point
    cdef double ay, az, by, bz, tc, theta_a, py, pz, xl, yl, r2, theta, dthy, dthz, r4
    cdef double l00, l01, l11, m00, m01, m11, c1, c2
    cdef Py_ssize_t seg
    if prm[17] > 0.0:
        cy = prm[9]
        cz = prm[10]
        R = prm[11]
        ay = prm[13]
        az = prm[14]
        by = prm[15]
        bz = prm[16]
        seg = <Py_ssize_t>prm[18]
        tc = prm[19]
        theta_a = prm[20]
        cap = prm[21]
        py = (1.0 - tc) * x[seg, 0] + tc * x[seg + 1, 0]
        pz = (1.0 - tc) * x[seg, 1] + tc * x[seg + 1, 1]
        vy = py - cy
        vz = pz - cz
        xl = vy * ay + vz * az
        yl = vy * by + vz * bz
        r2 = xl * xl + yl * yl
        theta = atan2(yl, xl)
        s = R * (theta - theta_a) / dslip
        energy += cap * dslip * _logcosh(s)
        th = tanh(s)
        dthy = (-yl * ay + xl * by) / r2
        dthz = (-yl * az + xl * bz) / r2
        gpy = cap * th * R * dthy
        gpz = cap * th * R * dthz
        G[seg, 0] += (1.0 - tc) * gpy
        G[seg, 1] += (1.0 - tc) * gpz
        G[seg + 1, 0] += tc * gpy
        G[seg + 1, 1] += tc * gpz
        if want:
            r4 = r2 * r2
            l00 = 2.0 * xl * yl / r4
            l01 = (yl * yl - xl * xl) / r4
            l11 = -2.0 * xl * yl / r4
            # M = [[ay, by], [az, bz]]; hth = M hl M^T
            m00 = ay * (l00 * ay + l01 * by) + by * (l01 * ay + l11 * by)
            m01 = ay * (l00 * az + l01 * bz) + by * (l01 * az + l11 * bz)
            m11 = az * (l00 * az + l01 * bz) + bz * (l01 * az + l11 * bz)
            c1 = cap / dslip * (1.0 - th * th) * R * R
            c2 = cap * th * R
            h00 = c1 * dthy * dthy + c2 * m00
            h01 = c1 * dthy * dthz + c2 * m01
            h11 = c1 * dthz * dthz + c2 * m11
            t0 = 1.0 - tc
            t1 = tc
            _add_block(H, seg, seg, t0 * t0, h00, h01, h11)
            _add_block(H, seg, seg + 1, t0 * t1, h00, h01, h11)
            _add_block(H, seg + 1, seg, t0 * t1, h00, h01, h11)
            _add_block(H, seg + 1, seg + 1, t1 * t1, h00, h01, h11)

    if not want:
        return energy

    cdef double[::1] gout = grad
    cdef double[:, ::1] hout = hess
    # suffix sums S[i] = sum_{j>i} G[j]
    Sa = np.zeros((nseg, 2))
    cdef double[:, ::1] S = Sa
    cdef double accy = 0.0, accz = 0.0
    for i in range(nseg - 1, -1, -1):
        accy += G[i + 1, 0]
        accz += G[i + 1, 1]
        S[i, 0] = accy
        S[i, 1] = accz
    upa = np.empty((nseg, 2))
    cdef double[:, ::1] up = upa
    for i in range(nseg):
        up[i, 0] = -ell * sphi[i]
        up[i, 1] = ell * cphi[i]
        gout[i] = up[i, 0] * S[i, 0] + up[i, 1] * S[i, 1]

    # C[i, k] = sum_{j>i, m>k} H[j, m], built in place from the bottom-right corner
    Ca = np.zeros((nseg + 1, nseg + 1, 2, 2))
    cdef double[:, :, :, ::1] C = Ca
    for i in range(nseg - 1, -1, -1):
        for k in range(nseg - 1, -1, -1):
            for a_ in range(2):
                for b_ in range(2):
                    C[i, k, a_, b_] = (H[i + 1, k + 1, a_, b_] + C[i + 1, k, a_, b_]
                                       + C[i, k + 1, a_, b_] - C[i + 1, k + 1, a_, b_])
    for i in range(nseg):
        for k in range(nseg):
            hout[i, k] = (up[i, 0] * (C[i, k, 0, 0] * up[k, 0] + C[i, k, 0, 1] * up[k, 1])
                          + up[i, 1] * (C[i, k, 1, 0] * up[k, 0] + C[i, k, 1, 1] * up[k, 1]))
        hout[i, i] -= ell * (cphi[i] * S[i, 0] + sphi[i] * S[i, 1])

    for i in range(nseg):
        d = kb if i == 0 else kj
        gout[i] += d * dphi[i]
        hout[i, i] += d
        if i + 1 < nseg:
            gout[i] -= kj * dphi[i + 1]
            hout[i, i] += kj
            hout[i, i + 1] -= kj
            hout[i + 1, i] -= kj
    return energy


cdef inline void _add_block(double[:, :, :, ::1] H, Py_ssize_t i, Py_ssize_t k, double f,
                            double h00, double h01, double h11) noexcept nogil:
    H[i, k, 0, 0] += f * h00
    H[i, k, 0, 1] += f * h01
    H[i, k, 1, 0] += f * h01
    H[i, k, 1, 1] += f * h11
