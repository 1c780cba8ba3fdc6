"""Finger servo: orientation, vertical and tangential motion.

Three independent loops share one tactile frame per cycle. The orientation
loop drives the left/right pressure difference to zero by rotating the
finger about X; the vertical loop moves the finger along its own axis to
hold the total press force; tangential motion is a plain velocity command.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import PoseLimit

DT = 0.02
OMEGA_MAX = 0.5
V_MAX = 5e-3


@dataclass(frozen=True)
class FingerPose:
    """Tip position (y, z) in metres and rotation ``alpha`` about X.

    At ``alpha = 0`` the finger points straight down (-Z) and its own +y
    axis coincides with global +Y.
    """

    position: tuple[float, float]
    alpha: float = 0.0
    radius: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "position", (float(self.position[0]), float(self.position[1])))
        if not -math.pi / 2 < self.alpha < math.pi / 2:
            raise PoseLimit(f"alpha={self.alpha:.4f} rad outside (-pi/2, pi/2)")

    @property
    def axis(self) -> np.ndarray:
        """Unit vector along the finger's -z (towards the pressed surface)."""
        return np.array([math.sin(self.alpha), -math.cos(self.alpha)])

    @property
    def side(self) -> np.ndarray:
        """Unit vector along the finger's +y."""
        return np.array([math.cos(self.alpha), math.sin(self.alpha)])


@dataclass(frozen=True)
class PidState:
    kp: float
    ki: float = 0.0
    kd: float = 0.0
    integral_limit: float = math.inf
    output_limit: float = math.inf
    integral: float = 0.0
    prev_error: float | None = None

    def step(self, error: float, dt: float) -> tuple[float, "PidState"]:
        """One discrete update: trapezoidal integral, backward-difference derivative."""
        if not dt > 0:
            raise ValueError("dt must be positive")
        prev = error if self.prev_error is None else self.prev_error
        lim = self.integral_limit
        integral = min(max(self.integral + 0.5 * (error + prev) * dt, -lim), lim)
        deriv = (error - prev) / dt
        out = self.kp * error + self.ki * integral + self.kd * deriv
        out = min(max(out, -self.output_limit), self.output_limit)
        return out, replace(self, integral=integral, prev_error=error)

    def reset(self) -> "PidState":
        return replace(self, integral=0.0, prev_error=None)


@dataclass(frozen=True)
class MotionCommand:
    omega_x: float = 0.0
    V_v: float = 0.0
    V_t: float = 0.0


def orientation_pid(kp=4e-4, ki=1e-5, kd=1e-5, integral_limit=5e3, output_limit=OMEGA_MAX) -> PidState:
    return PidState(kp, ki, kd, integral_limit, output_limit)


def vertical_pid(kp=1.5e-6, ki=3e-6, kd=0.0, integral_limit=500.0, output_limit=V_MAX) -> PidState:
    return PidState(kp, ki, kd, integral_limit, output_limit)


def orientation_step(pid: PidState, P_dif: float, dt: float = DT):
    """Angular velocity about X from the left/right imbalance.

    Positive ``P_dif`` (left pressing harder) yields a negative rotation,
    which unloads the left half. Returns ``(omega_x, delta_alpha, pid)``.
    """
    u, pid = pid.step(P_dif - 0.0, dt)
    omega = -u
    return omega, dt * omega, pid


def vertical_step(pid: PidState, P_s: float, P_des: float, dt: float = DT):
    """Velocity along the finger axis; positive moves towards the page.

    Returns ``(V_v, delta_h, pid)``.
    """
    if P_des < 0:
        raise ValueError("P_des must be non-negative")
    u, pid = pid.step(P_s - P_des, dt)
    v = -u
    return v, dt * v, pid


def integrate_pose(pose: FingerPose, cmd: MotionCommand, dt: float = DT) -> FingerPose:
    """Rotate by ``omega_x * dt``, then translate along the rotated finger axes."""
    alpha = pose.alpha + dt * cmd.omega_x
    if not -math.pi / 2 < alpha < math.pi / 2:
        raise PoseLimit(f"alpha={alpha:.4f} rad outside (-pi/2, pi/2)")
    s, c = math.sin(alpha), math.cos(alpha)
    y = pose.position[0] + dt * (cmd.V_v * s + cmd.V_t * c)
    z = pose.position[1] + dt * (-cmd.V_v * c + cmd.V_t * s)
    return FingerPose((y, z), alpha, pose.radius)
