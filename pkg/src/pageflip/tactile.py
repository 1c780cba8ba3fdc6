"""Synthetic 4x4 three-axis tactile pad.

Readings are raw counts. Taxel ``p_k`` (1-based) sits at row ``(k-1) % 4``
and column ``(k-1) // 4`` of the pressure image, so columns 0-1 hold
``p1..p8`` (the left region, on the finger's -y side) and columns 2-3 hold
``p9..p16`` (the right region).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ROWS = COLS = 4
SUBDIV = 32
P_EPS = 50.0


@dataclass(frozen=True)
class SensorCalibration:
    counts_per_newton: float = 1000.0
    taxel_pitch: float = 0.004
    noise_sigma: float = 0.0

    def __post_init__(self):
        if not self.counts_per_newton > 0:
            raise ValueError("counts_per_newton must be positive")
        if not self.taxel_pitch > 0:
            raise ValueError("taxel_pitch must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")

    @property
    def pad_width(self) -> float:
        return COLS * self.taxel_pitch


@dataclass(frozen=True)
class TactileFrame:
    P_f: np.ndarray
    T_f: np.ndarray
    timestamp: int = 0

    def __post_init__(self):
        for name in ("P_f", "T_f"):
            m = np.asarray(getattr(self, name), dtype=float)
            if m.shape != (ROWS, COLS):
                raise ValueError(f"{name} must be 4x4")
            object.__setattr__(self, name, m)
        if (self.P_f < 0).any():
            raise ValueError("normal readings must be non-negative")

    @classmethod
    def zeros(cls, timestamp: int = 0) -> "TactileFrame":
        return cls(np.zeros((ROWS, COLS)), np.zeros((ROWS, COLS)), timestamp)

    @classmethod
    def from_row(cls, row, timestamp: int = 0) -> "TactileFrame":
        row = np.asarray(row, dtype=float)
        if row.size != 32:
            raise ValueError("expected 32 values")
        return cls(row[:16].reshape(COLS, ROWS).T, row[16:].reshape(COLS, ROWS).T, timestamp)

    def to_row(self) -> np.ndarray:
        """p1..p16 then t1..t16 (column-major, as in the pressure image)."""
        return np.concatenate((self.P_f.T.ravel(), self.T_f.T.ravel()))

    def csv_row(self) -> str:
        return ",".join(repr(float(v)) for v in self.to_row())


@dataclass(frozen=True)
class TactileSums:
    P_s_L: float
    P_s_R: float
    P_s: float
    T_s: float
    P_dif: float
    mu: float | None  # None when the press force is below the guard


def column_loads(footprint, pad_width: float) -> np.ndarray:
    """Normal force per taxel column from a sampled footprint.

    The pad is split into ``4 * SUBDIV`` strips along its width; each sample
    lands in one strip and strips are summed per column. Load beyond the pad
    edge is taken by the outermost strip (the rubber skin wraps the sensor).
    """
    u, f = footprint
    nbins = COLS * SUBDIV
    if len(u) == 0:
        return np.zeros(COLS)
    idx = np.floor((np.asarray(u) / pad_width + 0.5) * nbins).astype(int)
    idx = np.clip(idx, 0, nbins - 1)
    strips = np.bincount(idx, weights=np.asarray(f, dtype=float), minlength=nbins)
    return strips.reshape(COLS, SUBDIV).sum(1)


def render_tactile(contact, calib: SensorCalibration, rng_seed: int = 0, timestamp: int = 0) -> TactileFrame:
    """Pressure and shear images for one servo cycle."""
    if contact is None or not contact.normal_force_total > 0.0:
        P = np.zeros((ROWS, COLS))
        T = np.zeros((ROWS, COLS))
    else:
        cols = column_loads(contact.footprint, calib.pad_width)
        total = cols.sum()
        P = np.tile(cols / ROWS, (ROWS, 1)) * calib.counts_per_newton
        share = cols / total if total > 0 else np.zeros(COLS)
        T = np.tile(share / ROWS, (ROWS, 1)) * contact.tangential_force_total * calib.counts_per_newton
    if calib.noise_sigma > 0:
        rng = np.random.default_rng(rng_seed)
        P = np.maximum(P + rng.normal(0.0, calib.noise_sigma, P.shape), 0.0)
        T = T + rng.normal(0.0, calib.noise_sigma, T.shape)
    return TactileFrame(P, T, timestamp)


def compute_sums(frame: TactileFrame, P_eps: float = P_EPS) -> TactileSums:
    left = float(frame.P_f[:, :2].sum())
    right = float(frame.P_f[:, 2:].sum())
    ps = left + right
    ts = float(frame.T_f.sum())
    mu = ts / ps if ps >= P_eps and ps > 0 else None
    return TactileSums(left, right, ps, ts, left - right, mu)
