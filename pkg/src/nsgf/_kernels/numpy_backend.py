"""Pure-numpy implementations of the hot kernels.

Semantics are shared bit-for-bit with the compiled core in ``_core.pyx``:
both follow the same arithmetic expressions in the same order, so a build
with or without the extension produces identical numbers.

Grid convention: ``data[ix, iy, iz]`` holds the node value at
``bbox_min + (ix, iy, iz) * voxel`` where ``voxel = (bbox_max - bbox_min) /
(dims - 1)``. Queries outside the box clamp to the boundary value and are
flagged.
"""
from __future__ import annotations

import numpy as np


def trilinear(data: np.ndarray, bbox_min: np.ndarray, voxel: np.ndarray,
              pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Trilinear interpolation at ``pts`` (N, 3). Returns (values, clamped)."""
    dims = np.asarray(data.shape)
    local = (pts - bbox_min[None, :]) / voxel[None, :]
    clamped = np.any((local < 0.0) | (local > (dims - 1)[None, :]), axis=1)
    local = np.clip(local, 0.0, (dims - 1).astype(np.float64))
    cell = np.minimum(np.floor(local).astype(np.intp), dims - 2)
    f = local - cell
    i, j, k = cell[:, 0], cell[:, 1], cell[:, 2]
    fx, fy, fz = f[:, 0], f[:, 1], f[:, 2]
    gx, gy, gz = 1.0 - fx, 1.0 - fy, 1.0 - fz
    vals = (data[i, j, k] * gx * gy * gz
            + data[i + 1, j, k] * fx * gy * gz
            + data[i, j + 1, k] * gx * fy * gz
            + data[i, j, k + 1] * gx * gy * fz
            + data[i + 1, j + 1, k] * fx * fy * gz
            + data[i + 1, j, k + 1] * fx * gy * fz
            + data[i, j + 1, k + 1] * gx * fy * fz
            + data[i + 1, j + 1, k + 1] * fx * fy * fz)
    return vals, clamped


def trilinear_grad(data: np.ndarray, bbox_min: np.ndarray, voxel: np.ndarray,
                   pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Finite-difference gradient of the trilinear field at ``pts``.

    Central differences with step h = voxel/2 per axis; one-sided within one
    voxel of the box boundary (flagged in the second return).
    """
    n = pts.shape[0]
    dims = np.asarray(data.shape)
    bbox_max = bbox_min + voxel * (dims - 1)
    h = voxel * 0.5
    center, _ = trilinear(data, bbox_min, voxel, pts)
    grads = np.empty((n, 3), dtype=np.float64)
    onesided = np.zeros(n, dtype=bool)
    for a in range(3):
        off = np.zeros(3)
        off[a] = h[a]
        plus, _ = trilinear(data, bbox_min, voxel, pts + off[None, :])
        minus, _ = trilinear(data, bbox_min, voxel, pts - off[None, :])
        low = pts[:, a] < bbox_min[a] + voxel[a]
        high = pts[:, a] > bbox_max[a] - voxel[a]
        g = (plus - minus) / (2.0 * h[a])
        g = np.where(low, (plus - center) / h[a], g)
        g = np.where(high, (center - minus) / h[a], g)
        grads[:, a] = g
        onesided |= low | high
    return grads, onesided


def _value_at(data, bbox_min, voxel, origin, direction, t):
    p = origin + t * direction
    v, _ = trilinear(data, bbox_min, voxel, p[None, :])
    return float(v[0])


def line_iso_crossing(data: np.ndarray, bbox_min: np.ndarray, voxel: np.ndarray,
                      origin: np.ndarray, direction: np.ndarray,
                      lo: float, hi: float, iso: float,
                      step: float, tol: float,
                      outward_first: bool = False,
                      falling_only: bool = False) -> tuple[float, bool]:
    """Nearest iso-crossing of the field along ``origin + t * direction``.

    Scans t in [lo, hi] (lo <= 0 <= hi) in brackets of ``step``; outward
    (t > 0) and inward arms are interleaved by distance unless
    ``outward_first``. With ``falling_only`` a bracket only counts when the
    field falls through iso as t increases (the ray exits the solid). A found
    bracket is bisected to width <= ``tol`` and the midpoint returned.
    Returns (0.0, False) when no crossing exists.
    """
    s0 = _value_at(data, bbox_min, voxel, origin, direction, 0.0) - iso
    if s0 == 0.0:
        return 0.0, True

    def brackets():
        n_out = int(np.ceil(hi / step)) if hi > 0.0 else 0
        n_in = int(np.ceil(-lo / step)) if lo < 0.0 else 0
        if outward_first:
            for k in range(n_out):
                yield k * step, min((k + 1) * step, hi)
            for k in range(n_in):
                yield -k * step, max(-(k + 1) * step, lo)
        else:
            for k in range(max(n_out, n_in)):
                if k < n_out:
                    yield k * step, min((k + 1) * step, hi)
                if k < n_in:
                    yield -k * step, max(-(k + 1) * step, lo)

    for a, b in brackets():
        sa = _value_at(data, bbox_min, voxel, origin, direction, a) - iso
        sb = _value_at(data, bbox_min, voxel, origin, direction, b) - iso
        if falling_only:
            s_early, s_late = (sa, sb) if a <= b else (sb, sa)
            if not (s_early > 0.0 >= s_late):
                continue
        elif (sa > 0.0) == (sb > 0.0):
            continue
        # bisect [a, b] (a may exceed b on the inward arm; order is irrelevant)
        for _ in range(64):
            if abs(b - a) <= tol:
                break
            mid = 0.5 * (a + b)
            sm = _value_at(data, bbox_min, voxel, origin, direction, mid) - iso
            if (sm > 0.0) == (sa > 0.0):
                a, sa = mid, sm
            else:
                b, sb = mid, sm
        return 0.5 * (a + b), True
    return 0.0, False


def line_iso_crossing_batch(data, bbox_min, voxel, origins, directions,
                            los, his, iso, step, tol,
                            outward_first: bool = False,
                            falling_only: bool = False):
    n = origins.shape[0]
    ts = np.zeros(n, dtype=np.float64)
    founds = np.zeros(n, dtype=bool)
    for i in range(n):
        ts[i], founds[i] = line_iso_crossing(
            data, bbox_min, voxel, origins[i], directions[i],
            float(los[i]), float(his[i]), iso, step, tol, outward_first,
            falling_only)
    return ts, founds
