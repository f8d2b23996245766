"""Gaussian-kernel mean shift for per-label cluster center estimation."""
from __future__ import annotations

import logging

import numpy as np

from ..errors import UserError

log = logging.getLogger(__name__)


def mean_shift_mode(points: np.ndarray, bandwidth: float, start=None,
                    tol: float = 1e-6, max_iter: int = 100) -> np.ndarray:
    """Iterate the Gaussian mean-shift update from ``start`` (default: centroid)."""
    pts = np.asarray(points, dtype=np.float64)
    m = pts.mean(axis=0) if start is None else np.asarray(start, dtype=np.float64)
    inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth)
    for _ in range(max_iter):
        w = np.exp(-((pts - m) ** 2).sum(axis=1) * inv2h2)
        total = w.sum()
        if total <= 0:
            break
        m_next = (w[:, None] * pts).sum(axis=0) / total
        if np.linalg.norm(m_next - m) < tol:
            return m_next
        m = m_next
    return m


def kernel_density(points: np.ndarray, bandwidth: float, at: np.ndarray) -> float:
    """Unnormalized Gaussian KDE value, used to verify the ascent property."""
    pts = np.asarray(points, dtype=np.float64)
    inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth)
    return float(np.exp(-((pts - at) ** 2).sum(axis=1) * inv2h2).sum())


def mean_shift_centers(points: np.ndarray, labels: np.ndarray,
                       bandwidth: float) -> dict[int, np.ndarray]:
    """Converged mean-shift mode per label; labels with < 3 points are dropped."""
    if bandwidth <= 0:
        raise UserError(f"bandwidth must be positive, got {bandwidth}")
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    labels = np.asarray(labels)
    out: dict[int, np.ndarray] = {}
    for label in np.unique(labels):
        group = pts[labels == label]
        if len(group) < 3:
            log.warning("label %d dropped: only %d point(s)", label, len(group))
            continue
        out[int(label)] = mean_shift_mode(group, bandwidth)
    return out
