"""Page contour descriptor and the two-loop deformation controller.

The page seen by the camera is reduced to a cubic Bezier curve. Its
control polygon gives the pair ``(Theta, X_c)``: the sum of the two
interior angles (degrees) and the sum of the four control-point
abscissas (pixels). Pressure shapes ``Theta``; tangential finger motion
shifts ``X_c``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .control import DT, PidState
from .errors import ContactLost, DegenerateInput, PageflipError
from .physics.markers import page_markers
from .rig import PagePlant, Rig, servo_cycle
from .tactile import P_EPS

N_MARKERS = 7
MIN_SPAN = 1.0  # px
PRESS_STEP_LIMIT = 0.05  # fraction of the Up reference per shape update
SHAPE_PERIOD = 5  # servo cycles per camera frame
MARKER_START = 0.04  # m past the binding; the strip held by the binding is out of view


@dataclass(frozen=True)
class CameraModel:
    """Affine side view: image u grows with world Y; v grows downwards unless ``v_down`` is off."""

    scale: float = 2000.0
    offset: tuple[float, float] = (0.0, 400.0)
    image_size: tuple[int, int] = (640, 480)
    v_down: bool = True

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if min(self.image_size) <= 0:
            raise ValueError("image_size must be positive")
        object.__setattr__(self, "offset", (float(self.offset[0]), float(self.offset[1])))

    def project(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        sv = -self.scale if self.v_down else self.scale
        return np.column_stack((self.offset[0] + self.scale * p[:, 0], self.offset[1] + sv * p[:, 1]))

    def in_view(self, pixels) -> bool:
        px = np.asarray(pixels, dtype=float)
        w, h = self.image_size
        return bool(((px[:, 0] >= 0) & (px[:, 0] <= w) & (px[:, 1] >= 0) & (px[:, 1] <= h)).all())


@dataclass(frozen=True)
class ShapeTarget:
    Theta_des: float
    X_c_des: float

    def __post_init__(self):
        if not (math.isfinite(self.Theta_des) and math.isfinite(self.X_c_des)):
            raise ValueError("shape target must be finite")


@dataclass(frozen=True)
class ShapeDescriptor:
    control_points: np.ndarray
    theta: tuple[float, float]
    Theta: float
    X_c: float

    def errors(self, target: ShapeTarget) -> tuple[float, float]:
        return self.Theta - target.Theta_des, self.X_c - target.X_c_des


def bernstein(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)[:, None]
    s = 1.0 - t
    return np.hstack((s ** 3, 3 * s * s * t, 3 * s * t * t, t ** 3))


def bezier_points(control_points, t) -> np.ndarray:
    return bernstein(t) @ np.asarray(control_points, dtype=float)


def _inner_solve(m, t):
    """Least-squares interior control points for fixed parameters and endpoints."""
    B = bernstein(t)
    rhs = m - np.outer(B[:, 0], m[0]) - np.outer(B[:, 3], m[-1])
    inner, *_ = np.linalg.lstsq(B[:, 1:3], rhs, rcond=None)
    return inner


def fit_bezier(markers) -> np.ndarray:
    """Cubic Bezier through the first and last marker, least squares elsewhere.

    Marker ``k`` of ``M`` gets the curve parameter ``k / (M - 1)``. Markers
    sit at equal arc length along the page, where this is within a fraction
    of a percent of chord-length parameters, and it keeps the fit linear in
    the markers: small marker noise moves the control points
    proportionally, and samples of a cubic taken at equal parameter steps
    are recovered exactly.
    """
    m = np.asarray(markers, dtype=float)
    if m.ndim != 2 or m.shape[1] != 2 or m.shape[0] < 4:
        raise DegenerateInput("need at least four 2-D markers")
    if not np.isfinite(m).all():
        raise DegenerateInput("markers must be finite")
    if np.hypot(*np.ptp(m, axis=0)) < MIN_SPAN:
        raise DegenerateInput("markers span less than one pixel")
    if np.any(np.hypot(*np.diff(m, axis=0).T) <= 0.0):
        raise DegenerateInput("consecutive markers coincide")
    t = np.linspace(0.0, 1.0, m.shape[0])
    return np.vstack((m[0], _inner_solve(m, t), m[-1]))


def interior_angle(prev, vertex, nxt) -> float:
    a = np.asarray(prev, dtype=float) - vertex
    b = np.asarray(nxt, dtype=float) - vertex
    if not (np.hypot(*a) > 0 and np.hypot(*b) > 0):
        raise DegenerateInput("coincident adjacent control points")
    return math.degrees(math.atan2(abs(a[0] * b[1] - a[1] * b[0]), float(a @ b)))


def descriptor(control_points) -> ShapeDescriptor:
    c = np.array(control_points, dtype=float)
    if c.shape != (4, 2):
        raise DegenerateInput("a cubic has exactly four control points")
    theta = (interior_angle(c[0], c[1], c[2]), interior_angle(c[1], c[2], c[3]))
    c.setflags(write=False)
    return ShapeDescriptor(c, theta, theta[0] + theta[1], float(c[:, 0].sum()))


def measure_shape(state, camera: CameraModel, count: int = N_MARKERS,
                  start: float = MARKER_START) -> ShapeDescriptor:
    """Descriptor of a solved page as the synthetic camera sees it."""
    return descriptor(fit_bezier(page_markers(state, camera, count, start)))


@dataclass(frozen=True)
class ShapePids:
    """``theta`` maps the angle error to a press increment, ``x`` the abscissa error to a speed."""

    theta: PidState = field(default_factory=lambda: PidState(-20.0, 0.0, -60.0, 1e3, math.inf))
    x: PidState = field(default_factory=lambda: PidState(1e-4, 0.0, 0.0, 1e3, 0.02))

    def reset(self) -> "ShapePids":
        return ShapePids(self.theta.reset(), self.x.reset())


def shape_control_step(desc: ShapeDescriptor, target: ShapeTarget, pids: ShapePids,
                       dt: float = SHAPE_PERIOD * DT, P_s: float | None = None, P_eps: float = P_EPS):
    """One camera-rate update. Returns ``(delta_P4_des, V_t4, pids)``.

    A positive angle error (page straighter than wanted) lowers the press
    reference; a negative abscissa error (contour left of target) moves
    the finger towards +y.
    """
    if P_s is not None and P_s < P_eps:
        raise ContactLost(f"press force {P_s:.1f} below {P_eps:.1f} counts")
    e_theta, e_x = desc.errors(target)
    u_theta, theta_pid = pids.theta.step(e_theta, dt)
    u_x, x_pid = pids.x.step(e_x, dt)
    return -u_theta, -u_x, ShapePids(theta_pid, x_pid)


def clamp_press_step(delta: float, P3_des: float, limit: float = PRESS_STEP_LIMIT) -> float:
    bound = limit * P3_des
    return min(max(delta, -bound), bound)


@dataclass(frozen=True)
class ShapeBand:
    """Convergence band and how many consecutive frames must sit inside it."""

    Theta: float = 3.0
    X_c: float = 15.0
    hold: int = 25

    def inside(self, e_theta: float, e_x: float) -> bool:
        return abs(e_theta) <= self.Theta and abs(e_x) <= self.X_c


@dataclass
class ShapeTrace:
    records: list[dict] = field(default_factory=list)
    converged_cycle: int | None = None
    final: ShapeDescriptor | None = None
    rig: Rig | None = None
    P4_des: float | None = None


def run_shape_control(rig: Rig, P3_des: float, target: ShapeTarget, camera: CameraModel = CameraModel(),
                      pids: ShapePids = ShapePids(), band: ShapeBand = ShapeBand(),
                      max_cycles: int = 3000, P_eps: float = P_EPS, markers: int = N_MARKERS,
                      marker_start: float = MARKER_START, observer=None) -> ShapeTrace:
    """Close the shape loop around the press servo until the descriptor settles.

    The press reference starts at ``P3_des``. Every ``SHAPE_PERIOD`` servo
    cycles the page is measured and the reference and tangential speed are
    updated. Stops once ``band.hold`` consecutive frames are inside the
    band, or after ``max_cycles``. Losing contact raises
    :class:`ContactLost` with the partial trace attached as ``err.trace``.
    """
    trace = ShapeTrace(P4_des=float(P3_des))
    if not isinstance(rig.plant, PagePlant):
        raise TypeError("shape control needs a page plant")
    P_des, V_t, inside = float(P3_des), 0.0, 0
    frame_dt = SHAPE_PERIOD * rig.dt
    try:
        for k in range(max_cycles):
            rig, rec = servo_cycle(rig, P_des, V_t)
            s, c = rec.sums, rec.command
            row = {"cycle": rec.cycle, "P_des_current": P_des, "P_s": s.P_s, "P_dif": s.P_dif, "T_s": s.T_s,
                   "mu": s.mu, "alpha": rec.pose.alpha, "y": rec.pose.position[0],
                   "z": rec.pose.position[1], "omega_x": c.omega_x, "V_v": c.V_v, "V_t": c.V_t,
                   "Theta": None, "X_c": None}
            if s.P_s < P_eps:
                trace.records.append(row)
                raise ContactLost(f"press force {s.P_s:.1f} below {P_eps:.1f} counts at cycle {rec.cycle}")
            if (k + 1) % SHAPE_PERIOD == 0:
                desc = measure_shape(rig.plant.state, camera, markers, marker_start)
                trace.final = desc
                row["Theta"], row["X_c"] = desc.Theta, desc.X_c
                d_p, V_t, pids = shape_control_step(desc, target, pids, frame_dt, rec.sums.P_s, P_eps)
                P_des = max(P_des + clamp_press_step(d_p, P3_des), P_eps)
                inside = inside + 1 if band.inside(*desc.errors(target)) else 0
            trace.records.append(row)
            if observer is not None:
                observer(rig, row)
            if inside >= band.hold:
                trace.converged_cycle = rec.cycle
                break
    except PageflipError as err:
        trace.rig, trace.P4_des = rig, P_des
        err.trace = trace
        raise
    trace.rig, trace.P4_des = rig, P_des
    return trace
