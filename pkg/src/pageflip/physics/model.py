"""Value types for the page cross-section model.

The page is an inextensible chain of ``N`` nodes in the global Y-Z plane.
Node 0 is bound to the spine; the chain runs from the spine towards the free
edge. The support is the plane ``z = 0`` and the page rests on top of it.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

STICK = "stick"
SLIP = "slip"

STIFFNESS_CLASSES = {"low": 1e-3, "medium": 2e-3, "high": 8e-3}
GUTTER = 0.005  # rad, upward tilt of the page at the binding


@dataclass(frozen=True)
class PageMaterial:
    """Mechanical constants of one page and its two contacts.

    ``bending_stiffness`` is the flexural rigidity EI of the whole strip
    (N*m^2); the discrete joint stiffness is ``EI / rest_length``. The joint
    at the spine has half a segment of page on its dual cell, so a rigid
    clamp there is ``2 EI / rest_length``; ``binding`` scales that clamp
    (1 rigid, 0 a free pivot). A book binding gives a little, hence 0.5.
    Penalty stiffnesses are per unit page length (N/m^2).
    """

    bending_stiffness: float = STIFFNESS_CLASSES["medium"]
    mu_support: float = 0.2
    mu_tip: float = 0.8
    gravity_load: float = 0.03
    support_stiffness: float = 1e9
    tip_stiffness: float = 1e6
    slip_length: float = 5e-5
    binding: float = 0.5

    def __post_init__(self):
        for name in ("bending_stiffness", "mu_support", "mu_tip", "gravity_load",
                     "support_stiffness", "tip_stiffness", "slip_length"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.binding >= 0:
            raise ValueError("binding must be non-negative")
        if not self.mu_tip > self.mu_support:
            raise ValueError("mu_tip must exceed mu_support")

    @classmethod
    def of_class(cls, stiffness: str, **kw) -> "PageMaterial":
        return cls(bending_stiffness=STIFFNESS_CLASSES[stiffness], **kw)


@dataclass(frozen=True)
class ContactRecord:
    support: bool = False
    fingertip: bool = False
    friction: str | None = None  # STICK / SLIP for the support contact


@dataclass(frozen=True)
class TipMemory:
    """Incremental friction state of the fingertip contact.

    The material point at ``(segment, t)`` was last seen at pad angle
    ``theta_anchor`` (finger frame, already shifted by the carried elastic
    slip). ``normal`` is the tip normal force of the previous solve; it
    sets the Coulomb cap of the next one.
    """

    segment: int
    t: float
    theta_anchor: float
    normal: float
    slip: float = 0.0
    sliding: bool = False
    shear: float = 0.0


@dataclass(frozen=True)
class PageState:
    """Discretized page plus the friction memory carried between solves."""

    angles: np.ndarray
    rest_length: float
    spine: tuple[float, float] = (0.0, 0.0)
    spine_angle: float = np.pi
    clamped_end: int = 0
    support_normal: np.ndarray | None = None
    support_anchor: np.ndarray | None = None
    support_sliding: np.ndarray | None = None
    support_shear: np.ndarray | None = None
    tip: TipMemory | None = None
    nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=float)
        if angles.ndim != 1 or angles.size < 1:
            raise ValueError("angles must be a non-empty vector")
        if self.clamped_end != 0:
            raise ValueError("nodes are ordered from the spine; clamped_end must be 0")
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "nodes", node_positions(angles, self.rest_length, self.spine))
        n = angles.size + 1
        if self.support_normal is None:
            object.__setattr__(self, "support_normal", np.zeros(n))
        if self.support_anchor is None:
            object.__setattr__(self, "support_anchor", self.nodes[:, 0].copy())
        if self.support_sliding is None:
            object.__setattr__(self, "support_sliding", np.zeros(n, dtype=bool))
        if self.support_shear is None:
            object.__setattr__(self, "support_shear", np.zeros(n))

    @property
    def n_nodes(self) -> int:
        return self.angles.size + 1

    @property
    def length(self) -> float:
        return self.rest_length * self.angles.size

    @property
    def contact_records(self) -> tuple[ContactRecord, ...]:
        tip_nodes = set()
        if self.tip is not None:
            tip_nodes = {self.tip.segment, self.tip.segment + 1}
        recs = []
        for j in range(self.n_nodes):
            on_support = bool(self.support_normal[j] > 0.0)
            fric = None
            if on_support:
                fric = SLIP if self.support_sliding[j] else STICK
            recs.append(ContactRecord(on_support, j in tip_nodes, fric))
        return tuple(recs)

    def with_angles(self, angles) -> "PageState":
        return replace(self, angles=np.asarray(angles, dtype=float))


def node_positions(angles, rest_length, spine=(0.0, 0.0)) -> np.ndarray:
    steps = rest_length * np.column_stack((np.cos(angles), np.sin(angles)))
    nodes = np.empty((angles.size + 1, 2))
    nodes[0] = spine
    nodes[1:] = np.asarray(spine) + np.cumsum(steps, axis=0)
    return nodes


def flat_page(n_nodes: int = 20, length: float = 0.2, spine=(0.2, 0.0),
              spine_angle: float = np.pi, gutter: float = GUTTER) -> PageState:
    """Straight page lying on the support, spine at ``spine``.

    With the default ``spine_angle = pi`` the page extends towards -Y, so a
    finger moving along +Y rubs towards the spine. The binding holds the page
    tilted up by ``gutter`` radians, as in an open book; the resulting tiny
    bow gives a compressed page a preferred buckling direction.
    """
    if n_nodes < 2:
        raise ValueError("need at least two nodes")
    ell = length / (n_nodes - 1)
    rise = gutter if np.cos(spine_angle) < 0.0 else -gutter
    return PageState(angles=np.full(n_nodes - 1, float(spine_angle)), rest_length=ell,
                     spine=(float(spine[0]), float(spine[1])), spine_angle=float(spine_angle - rise))
