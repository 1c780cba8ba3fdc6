"""Rigid inclined plane: a page-free test plant for the pressing loops."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .solver import FingerContact, finger_frame

SAMPLES = 2048


@dataclass(frozen=True)
class RigidPlane:
    """Frictionless plane through ``origin`` rising at ``incline`` radians along +Y."""

    incline: float = math.radians(10.0)
    origin: tuple[float, float] = (0.0, 0.0)
    stiffness: float = 1e6  # N/m^2 per unit pad arc length

    @property
    def normal(self) -> np.ndarray:
        return np.array([-math.sin(self.incline), math.cos(self.incline)])

    def height(self, y: float) -> float:
        return self.origin[1] + (y - self.origin[0]) * math.tan(self.incline)


def plane_contact(plane: RigidPlane, finger) -> FingerContact:
    """Penalty contact between the fingertip circle and the plane."""
    axis, side, center = finger_frame(finger)
    R = finger.radius
    base = dict(tip_center=(float(center[0]), float(center[1])), tip_radius=R,
                tip_angle=float(finger.alpha))
    th = (np.arange(SAMPLES) + 0.5) / SAMPLES * math.pi - math.pi / 2
    pts = center[None, :] + R * (np.cos(th)[:, None] * axis + np.sin(th)[:, None] * side)
    depth = -((pts - np.asarray(plane.origin)) @ plane.normal)
    hit = depth > 0.0
    if not hit.any():
        return FingerContact(**base)
    f = plane.stiffness * depth[hit] * (R * math.pi / SAMPLES)
    u = R * th[hit]
    return FingerContact(normal_force_total=float(f.sum()), footprint=(u, f), **base)
