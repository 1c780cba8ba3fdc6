"""Quasi-static equilibrium of the page under a fingertip.

Each control cycle the page configuration is found by minimizing

    bending + gravity + support penalty + tip penalty + friction potentials

over the segment angles with a damped Newton method. Friction is handled
incrementally: every contact carries an anchor from the previous solve and a
regularized Coulomb potential whose cap uses the previous normal force. After
the solve the anchors are re-based (return mapping) so a sliding contact sits
on the cone boundary at the start of the next step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import lapack

from ..errors import NonConvergence
from . import kernel
from .model import PageMaterial, PageState, TipMemory

MAX_ITER = 200
GRAD_TOL = 1e-8
MAX_STEP = 0.25  # rad, per Newton update
CARRY = 5.0  # carried elastic slip, in slip lengths
SLIDE = 2.0  # |slip| beyond this many slip lengths counts as sliding
BELOW_SUPPORT = 5e-3
FLOOR = 1e-13  # relative energy resolution
STALL_TOL = 1e-5  # accepted gradient when rounding blocks further progress
KICK = 1e-3  # rad, minimum move along negative curvature

_GX, _GW = np.polynomial.legendre.leggauss(8)
GAUSS_X = np.ascontiguousarray(0.5 * (_GX + 1.0))
GAUSS_W = np.ascontiguousarray(0.5 * _GW)


@dataclass(frozen=True)
class FingerContact:
    """Physical forces between the fingertip and the page.

    ``footprint`` is a fine sampling of the normal load along the pad:
    ``(pad_u, force)`` with ``pad_u`` the arc coordinate on the tip surface
    measured from the finger axis towards the finger +y side (m) and
    ``force`` in newtons. ``tangential_force_total`` is the shear the finger
    applies to the page along the finger +y axis.
    """

    tip_center: tuple[float, float]
    tip_radius: float
    tip_angle: float
    normal_force_total: float = 0.0
    tangential_force_total: float = 0.0
    contact_arc: tuple[float, float] | None = None
    footprint: tuple[np.ndarray, np.ndarray] = (np.zeros(0), np.zeros(0))
    sliding: bool = False

    @property
    def in_contact(self) -> bool:
        return self.normal_force_total > 0.0


def finger_frame(finger):
    """Axis pointing into the page, the finger +y axis, and the tip circle centre."""
    a = finger.alpha
    axis = np.array([math.sin(a), -math.cos(a)])
    side = np.array([math.cos(a), math.sin(a)])
    center = np.asarray(finger.position, dtype=float) - finger.radius * axis
    return axis, side, center


def _params(state: PageState, material: PageMaterial, finger, end_load=(0.0, 0.0)):
    prm = np.zeros(kernel.NPRM)
    prm[23], prm[24] = end_load
    prm[0], prm[1] = state.spine
    prm[2] = state.spine_angle
    prm[3] = state.rest_length
    prm[4] = material.bending_stiffness
    prm[5] = material.gravity_load
    prm[6] = material.support_stiffness
    prm[7] = material.slip_length
    prm[22] = material.binding
    if finger is not None:
        axis, side, center = finger_frame(finger)
        prm[8] = 1.0
        prm[9], prm[10] = center
        prm[11] = finger.radius
        prm[12] = material.tip_stiffness
        prm[13], prm[14] = axis
        prm[15], prm[16] = side
        tip = state.tip
        if tip is not None and tip.normal > 0.0:
            prm[17] = 1.0
            prm[18] = tip.segment
            prm[19] = tip.t
            prm[20] = tip.theta_anchor
            prm[21] = material.mu_tip * tip.normal
    sup_cap = np.ascontiguousarray(material.mu_support * state.support_normal)
    sup_anchor = np.ascontiguousarray(state.support_anchor, dtype=float)
    return prm, sup_cap, sup_anchor


def total_energy(state: PageState, material: PageMaterial, finger=None, angles=None,
                 end_load=(0.0, 0.0)) -> float:
    """Energy of ``angles`` (default: the state's own) under the state's friction memory."""
    prm, cap, anchor = _params(state, material, finger, end_load)
    phi = np.ascontiguousarray(state.angles if angles is None else angles, dtype=float)
    return kernel.evaluate(phi, prm, cap, anchor, GAUSS_X, GAUSS_W)


def _direction(H, g):
    """Newton step; on an indefinite Hessian, a saddle-free step plus the
    most negative curvature direction, so compressed straight states buckle
    instead of stalling on the saddle."""
    c, info = lapack.dpotrf(H, lower=1)
    if info == 0:
        x, _ = lapack.dpotrs(c, -g, lower=1)
        return x
    lam, V = np.linalg.eigh(H)
    floor = 1e-10 * max(float(np.abs(lam).max()), 1e-12)
    gl = V.T @ g
    step = -V @ (gl / np.maximum(np.abs(lam), floor))
    if lam[0] < -floor:
        v = V[:, 0] if gl[0] <= 0.0 else -V[:, 0]
        step += v * min(MAX_STEP, abs(gl[0]) / -lam[0] + KICK)
    return step


def minimize(phi, prm, cap, anchor, max_iter=MAX_ITER, tol=GRAD_TOL):
    """Damped Newton with Armijo backtracking. Returns ``(phi, energy, iterations)``."""
    phi = np.array(phi, dtype=float)
    n = phi.size
    g = np.empty(n)
    H = np.empty((n, n))
    E = kernel.evaluate(phi, prm, cap, anchor, GAUSS_X, GAUSS_W, g, H)
    for it in range(max_iter):
        if math.sqrt(float(g @ g)) < tol:
            return phi, E, it
        step = _direction(H, g)
        big = float(np.abs(step).max())
        if big > MAX_STEP:
            step *= MAX_STEP / big
        slope = float(g @ step)
        if slope > 0.0:
            step = -g
            slope = -float(g @ g)
        gnorm = math.sqrt(float(g @ g))
        a = 1.0
        accepted = False
        pred = slope + 0.5 * float(step @ H @ step)
        if -min(slope, pred) > FLOOR * (abs(E) + 1e-9):
            while a >= 1e-10:
                trial = phi + a * step
                Et = kernel.evaluate(trial, prm, cap, anchor, GAUSS_X, GAUSS_W)
                if Et <= E + 1e-4 * a * slope:
                    accepted = True
                    break
                a *= 0.5
        if not accepted:
            # energy differences are lost in rounding: judge steps by the gradient instead
            g2 = np.empty(n)
            H2 = np.empty((n, n))
            a = 1.0
            while a >= 1e-3:
                trial = phi + a * step
                E2 = kernel.evaluate(trial, prm, cap, anchor, GAUSS_X, GAUSS_W, g2, H2)
                if math.sqrt(float(g2 @ g2)) < gnorm:
                    break
                a *= 0.5
            else:
                if gnorm < STALL_TOL:
                    return phi, E, it
                raise NonConvergence(f"line search stalled at |g|={gnorm:.3e}")
            phi, E, g, H = trial, E2, g2, H2
            continue
        phi = trial
        E = kernel.evaluate(phi, prm, cap, anchor, GAUSS_X, GAUSS_W, g, H)
    if math.sqrt(float(g @ g)) < STALL_TOL:
        return phi, E, max_iter
    raise NonConvergence(f"no equilibrium after {max_iter} iterations (|g|={math.sqrt(float(g @ g)):.3e})")


def tip_intervals(nodes, center, R):
    """``(segment, t_lo, t_hi)`` for every segment part lying inside the tip circle."""
    out = []
    for i in range(nodes.shape[0] - 1):
        a = nodes[i]
        e = nodes[i + 1] - a
        f = a - center
        A2 = e @ e
        Bq = f @ e
        Cq = f @ f - R * R
        disc = Bq * Bq - A2 * Cq
        if disc <= 0.0:
            continue
        sq = math.sqrt(disc)
        lo = max(0.0, (-Bq - sq) / A2)
        hi = min(1.0, (-Bq + sq) / A2)
        if hi > lo:
            out.append((i, lo, hi))
    return out


def _tip_samples(nodes, ell, center, R, axis, side, per_segment=None):
    """Penetrating part of every segment: material arc-length, pad angle, penetration, weight.

    With ``per_segment=None`` Gauss points are used (exact integration); an
    integer gives that many midpoint samples per segment (for rasterizing).
    """
    out_s, out_th, out_d, out_w = [], [], [], []
    for i, lo, hi in tip_intervals(nodes, center, R):
        a = nodes[i]
        e = nodes[i + 1] - a
        f = a - center
        span = hi - lo
        if per_segment is None:
            t = lo + span * GAUSS_X
            w = span * GAUSS_W * ell
        else:
            t = lo + span * (np.arange(per_segment) + 0.5) / per_segment
            w = np.full(per_segment, span * ell / per_segment)
        v = f[None, :] + t[:, None] * e[None, :]
        r = np.sqrt((v * v).sum(1))
        out_s.append((i + t) * ell)
        out_th.append(np.arctan2(v @ side, v @ axis))
        out_d.append(R - r)
        out_w.append(w)
    if not out_s:
        z = np.zeros(0)
        return z, z, z, z
    return (np.concatenate(out_s), np.concatenate(out_th),
            np.concatenate(out_d), np.concatenate(out_w))


def support_loads(nodes, ell, k_support):
    """Support reaction lumped onto nodes (N), integrated exactly per segment."""
    z = nodes[:, 1]
    loads = np.zeros(z.size)
    for i in np.nonzero((z[:-1] < 0.0) | (z[1:] < 0.0))[0]:
        a, b = z[i], z[i + 1]
        lo, hi = 0.0, 1.0
        if a >= 0.0:
            lo = a / (a - b)
        elif b >= 0.0:
            hi = a / (a - b)
        span = hi - lo
        if span <= 0.0:
            continue
        t = lo + span * GAUSS_X
        q = k_support * span * GAUSS_W * ell * (-(a + t * (b - a)))
        loads[i] += float(q @ (1.0 - t))
        loads[i + 1] += float(q @ t)
    return loads


def _point(nodes, seg, t):
    return (1.0 - t) * nodes[seg] + t * nodes[seg + 1]


def _pad_angle(p, center, axis, side):
    v = p - center
    return math.atan2(float(v @ side), float(v @ axis))


def _check_finger(finger):
    if finger is None:
        return
    vals = (finger.position[0], finger.position[1], finger.alpha, finger.radius)
    if not all(math.isfinite(v) for v in vals):
        raise ValueError("finger pose must be finite")
    _, _, center = finger_frame(finger)
    if center[1] - finger.radius < -BELOW_SUPPORT:
        raise NonConvergence("fingertip below the support; no equilibrium with the page between")


def solve_quasi_static(state: PageState, material: PageMaterial, finger=None,
                       max_iter: int = MAX_ITER, tol: float = GRAD_TOL,
                       end_load=(0.0, 0.0)) -> PageState:
    """Equilibrium page for the given finger pose, warm-started from ``state``.

    ``finger`` needs ``position`` (tip point, y and z), ``alpha`` and
    ``radius``; ``None`` means no finger. ``end_load`` is an extra force
    (N, along Y and Z) on the free-edge node. Raises :class:`NonConvergence`.
    """
    _check_finger(finger)
    prm, cap, anchor = _params(state, material, finger, end_load)
    phi, _, _ = minimize(state.angles, prm, cap, anchor, max_iter=max_iter, tol=tol)
    new = state.with_angles(phi)
    nodes = new.nodes
    ell = state.rest_length
    dl = material.slip_length

    # support contacts: loads, carried slip, sliding flags, reported friction
    loads = support_loads(nodes, ell, material.support_stiffness)
    slip = np.where(cap > 0.0, nodes[:, 0] - anchor, 0.0)
    shear = -cap * np.tanh(slip / dl)
    limit = material.mu_support * loads
    shear = np.clip(shear, -limit, limit)
    carry = np.clip(slip, -CARRY * dl, CARRY * dl)
    touching = loads > 0.0
    carry[~touching] = 0.0
    sliding = touching & (np.abs(slip) >= SLIDE * dl)
    new_anchor = nodes[:, 0] - carry

    tip = None
    if finger is not None:
        axis, side, center = finger_frame(finger)
        R = finger.radius
        s, th, d, w = _tip_samples(nodes, ell, center, R, axis, side)
        f = material.tip_stiffness * d * w
        normal = float(f.sum())
        if normal > 0.0:
            g = 0.0
            tip_shear = 0.0
            if prm[17] > 0.0:
                seg_old, t_old = int(prm[18]), prm[19]
                g = R * (_pad_angle(_point(nodes, seg_old, t_old), center, axis, side) - prm[20])
                tip_shear = -prm[21] * math.tanh(g / dl)
                lim = material.mu_tip * normal
                tip_shear = min(max(tip_shear, -lim), lim)
            sc = float(f @ s) / normal
            seg = min(int(sc // ell), state.n_nodes - 2)
            tc = sc / ell - seg
            theta_c = _pad_angle(_point(nodes, seg, tc), center, axis, side)
            kept = min(max(g, -CARRY * dl), CARRY * dl)
            tip = TipMemory(segment=seg, t=tc, theta_anchor=theta_c - kept / R, normal=normal,
                            slip=g, sliding=abs(g) >= SLIDE * dl, shear=tip_shear)

    return replace(new, support_normal=loads, support_anchor=new_anchor,
                   support_sliding=sliding, tip=tip, support_shear=shear)


def contact_forces(state: PageState, finger, material: PageMaterial, samples: int = 64) -> FingerContact:
    """Tip-page forces of a solved state. Zero record when not touching."""
    if finger is None:
        return FingerContact((math.nan, math.nan), 0.0, 0.0)
    axis, side, center = finger_frame(finger)
    R = finger.radius
    base = dict(tip_center=(float(center[0]), float(center[1])), tip_radius=R,
                tip_angle=float(finger.alpha))
    nodes = state.nodes
    ell = state.rest_length
    spans = tip_intervals(nodes, center, R)
    if not spans:
        return FingerContact(**base)
    s, th, d, w = _tip_samples(nodes, ell, center, R, axis, side)
    normal = float(material.tip_stiffness * (d @ w))
    if not normal > 0.0:
        return FingerContact(**base)
    arc = (min((i + lo) * ell for i, lo, _ in spans), max((i + hi) * ell for i, _, hi in spans))
    shear = 0.0
    sliding = False
    if state.tip is not None:
        shear = state.tip.shear
        sliding = state.tip.sliding
    fs, fth, fd, fw = _tip_samples(nodes, ell, center, R, axis, side, per_segment=samples)
    fp = (R * fth, material.tip_stiffness * fd * fw)
    return FingerContact(normal_force_total=normal, tangential_force_total=shear,
                         contact_arc=arc, footprint=fp,
                         sliding=sliding, **base)
