"""Reference (numpy) implementation of the page energy kernel.

Energy, gradient and Hessian with respect to the segment angles of the page.
The compiled module ``_ckernel`` implements exactly the same function; the
two are cross-checked in the test-suite and timed in ``benchmarks/``.

Parameter vector layout (``prm``)::

    0 spine_y   1 spine_z   2 spine_angle   3 rest_length   4 EI
    5 gravity   6 k_support 7 slip_length
    8 tip_on    9 cy       10 cz           11 R            12 k_tip
   13 Ay       14 Az       15 By           16 Bz
   17 tf_on    18 tf_seg   19 tf_t         20 tf_theta     21 tf_cap
   22 binding (spine joint stiffness as a fraction of a rigid clamp, 2 EI / rest_length)
   23 Fy       24 Fz          (external force on the free-edge node)

``A`` is the finger axis (pointing into the page), ``B`` the finger +y
axis. ``sup_cap[j]`` is the Coulomb cap of node ``j`` on the support and
``sup_anchor[j]`` its stick anchor along Y.
"""
import math

import numpy as np

NPRM = 25


def _logcosh(x):
    ax = abs(x)
    return ax + math.log1p(math.exp(-2.0 * ax)) - math.log(2.0)


def evaluate(phi, prm, sup_cap, sup_anchor, gx, gw, grad=None, hess=None):
    """Return the total energy; fill ``grad``/``hess`` in place when given."""
    want = grad is not None
    nseg = phi.shape[0]
    n = nseg + 1
    sy, sz, s_ang, ell, ei, wgt, ksup, dslip = prm[:8]
    kj = np.full(phi.shape[0], ei / ell)
    kj[0] *= 2.0 * prm[22]  # clamp joint: half-segment dual length

    cphi = np.cos(phi)
    sphi = np.sin(phi)
    x = np.empty((n, 2))
    x[0, 0] = sy
    x[0, 1] = sz
    x[1:, 0] = sy + np.cumsum(ell * cphi)
    x[1:, 1] = sz + np.cumsum(ell * sphi)

    dphi = np.empty(nseg)
    dphi[0] = phi[0] - s_ang
    dphi[1:] = phi[1:] - phi[:-1]
    energy = 0.5 * float(kj @ (dphi * dphi))

    # gravity: half of each segment weight on each end node
    nodew = np.full(n, wgt * ell)
    nodew[0] = nodew[-1] = 0.5 * wgt * ell
    energy += float(nodew @ x[:, 1])
    energy -= prm[23] * x[-1, 0] + prm[24] * x[-1, 1]

    if want:
        G = np.zeros((n, 2))
        H = np.zeros((n, n, 2, 2))
        G[:, 1] += nodew
        G[-1, 0] -= prm[23]
        G[-1, 1] -= prm[24]

    # support contact, exact over the penetrating part of each segment
    za = x[:-1, 1]
    zb = x[1:, 1]
    pen = np.nonzero((za < 0.0) | (zb < 0.0))[0]
    for i in pen:
        a, b = za[i], zb[i]
        lo, hi = 0.0, 1.0
        if a >= 0.0:
            lo = a / (a - b)
        elif b >= 0.0:
            hi = a / (a - b)
        span = hi - lo
        if span <= 0.0:
            continue
        t = lo + span * gx
        w = span * gw * ell * ksup
        u = -(a + t * (b - a))
        energy += 0.5 * float(w @ (u * u))
        if want:
            G[i, 1] -= float(w @ (u * (1.0 - t)))
            G[i + 1, 1] -= float(w @ (u * t))
            haa = float(w @ ((1.0 - t) ** 2))
            hab = float(w @ ((1.0 - t) * t))
            hbb = float(w @ (t * t))
            H[i, i, 1, 1] += haa
            H[i, i + 1, 1, 1] += hab
            H[i + 1, i, 1, 1] += hab
            H[i + 1, i + 1, 1, 1] += hbb

    # support friction, regularized Coulomb (log-cosh potential)
    for j in np.nonzero(sup_cap > 0.0)[0]:
        if j == 0:
            continue
        cap = sup_cap[j]
        s = (x[j, 0] - sup_anchor[j]) / dslip
        energy += cap * dslip * _logcosh(s)
        if want:
            th = math.tanh(s)
            G[j, 0] += cap * th
            H[j, j, 0, 0] += cap / dslip * (1.0 - th * th)

    if prm[8] > 0.0:
        cy, cz, R, ktip = prm[9:13]
        c = np.array([cy, cz])
        e = x[1:] - x[:-1]
        f = x[:-1] - c
        # distance from the centre to each segment
        tt = np.clip(-(f * e).sum(1) / (ell * ell), 0.0, 1.0)
        near = f + tt[:, None] * e
        close = np.nonzero((near * near).sum(1) < R * R)[0]
        for i in close:
            ei_, fi = e[i], f[i]
            A2 = ei_ @ ei_
            Bq = fi @ ei_
            Cq = fi @ fi - R * R
            disc = Bq * Bq - A2 * Cq
            if disc <= 0.0:
                continue
            sq = math.sqrt(disc)
            lo = max(0.0, (-Bq - sq) / A2)
            hi = min(1.0, (-Bq + sq) / A2)
            span = hi - lo
            if span <= 0.0:
                continue
            t = lo + span * gx
            w = span * gw * ell * ktip
            v = fi[None, :] + t[:, None] * ei_[None, :]
            r = np.sqrt((v * v).sum(1))
            d = R - r
            energy += 0.5 * float(w @ (d * d))
            if want:
                nh = v / r[:, None]
                gp = -(w * d)[:, None] * nh
                G[i] += ((1.0 - t)[:, None] * gp).sum(0)
                G[i + 1] += (t[:, None] * gp).sum(0)
                eye = np.eye(2)
                nn = nh[:, :, None] * nh[:, None, :]
                hp = w[:, None, None] * (nn - (d / r)[:, None, None] * (eye - nn))
                H[i, i] += (((1.0 - t) ** 2)[:, None, None] * hp).sum(0)
                hab = (((1.0 - t) * t)[:, None, None] * hp).sum(0)
                H[i, i + 1] += hab
                H[i + 1, i] += hab
                H[i + 1, i + 1] += ((t * t)[:, None, None] * hp).sum(0)

    if prm[17] > 0.0:
        cy, cz, R = prm[9], prm[10], prm[11]
        ay, az, by, bz = prm[13:17]
        seg = int(prm[18])
        tc = prm[19]
        theta_a = prm[20]
        cap = prm[21]
        p = (1.0 - tc) * x[seg] + tc * x[seg + 1]
        vy, vz = p[0] - cy, p[1] - cz
        xl = vy * ay + vz * az
        yl = vy * by + vz * bz
        r2 = xl * xl + yl * yl
        theta = math.atan2(yl, xl)
        s = R * (theta - theta_a) / dslip
        energy += cap * dslip * _logcosh(s)
        if want:
            th = math.tanh(s)
            # d theta / d p in world coordinates
            dth = np.array([(-yl * ay + xl * by) / r2, (-yl * az + xl * bz) / r2])
            gp = cap * th * R * dth
            G[seg] += (1.0 - tc) * gp
            G[seg + 1] += tc * gp
            r4 = r2 * r2
            hl = np.array([[2 * xl * yl, yl * yl - xl * xl],
                           [yl * yl - xl * xl, -2 * xl * yl]]) / r4
            M = np.array([[ay, by], [az, bz]])
            hth = M @ hl @ M.T
            hp = cap / dslip * (1.0 - th * th) * R * R * np.outer(dth, dth) + cap * th * R * hth
            H[seg, seg] += (1.0 - tc) ** 2 * hp
            H[seg, seg + 1] += (1.0 - tc) * tc * hp
            H[seg + 1, seg] += (1.0 - tc) * tc * hp
            H[seg + 1, seg + 1] += tc * tc * hp

    if not want:
        return energy

    # chain rule to segment angles; segment i moves every node j > i
    up = np.column_stack((-sphi, cphi)) * ell
    S = np.cumsum(G[::-1], axis=0)[::-1][1:]  # S[i] = sum_{j>i} G[j]
    grad[:] = (up * S).sum(1)
    Hs = H[1:, 1:]
    C = np.cumsum(np.cumsum(Hs[::-1, ::-1], axis=0), axis=1)[::-1, ::-1]
    hess[:, :] = np.einsum("ia,ikab,kb->ik", up, C, up)
    hess[np.diag_indices(nseg)] -= ell * (cphi * S[:, 0] + sphi * S[:, 1])

    # bending joints (spine ghost joint included)
    grad += kj * dphi
    grad[:-1] -= kj[1:] * dphi[1:]
    idx = np.arange(nseg)
    hess[idx, idx] += kj
    hess[idx[:-1], idx[:-1]] += kj[1:]
    hess[idx[:-1], idx[1:]] -= kj[1:]
    hess[idx[1:], idx[:-1]] -= kj[1:]
    return energy
