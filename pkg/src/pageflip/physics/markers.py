"""Synthetic marker observation of the page edge."""
import numpy as np


def sample_arclength(nodes: np.ndarray, count: int, start: float = 0.0) -> np.ndarray:
    """Points at equal arc-length along the polyline from ``start`` to the far end."""
    seg = np.sqrt((np.diff(nodes, axis=0) ** 2).sum(1))
    s = np.concatenate(([0.0], np.cumsum(seg)))
    if not 0.0 <= start < s[-1]:
        raise ValueError("start must lie on the polyline")
    targets = np.linspace(start, s[-1], count)
    return np.column_stack([np.interp(targets, s, nodes[:, k]) for k in range(2)])


def page_markers(state, camera, count: int = 7, start: float = 0.0) -> np.ndarray:
    """Pixel positions of ``count`` markers spread evenly along the page.

    Markers are ordered from the spine to the free edge; the first sits
    ``start`` metres of arc length past the binding.
    """
    return camera.project(sample_arclength(state.nodes, count, start))
