"""Occupancy-guided grasp width refinement."""
from __future__ import annotations

import numpy as np

from ..geomcore.field import OccupancyField, line_iso_crossing, line_iso_crossing_batch


def _bounds(field: OccupancyField, w0, w_max: float):
    # only accept exit crossings; trim the inward bound by one bisection
    # tolerance so the left contact itself (w = 0) cannot be picked up
    tol = field.min_voxel * 0.1
    lo = np.minimum(0.0, -w0 + tol)
    hi = w_max - w0
    return lo, hi


def refine_width(field: OccupancyField, p, b, w_coarse: float, w_max: float,
                 iso: float = 0.5, outward_first: bool = False
                 ) -> tuple[float, bool]:
    """Snap the antipodal contact p + w*b onto the occupancy iso-surface.

    Marches along the baseline from the coarse contact in half-voxel steps
    within w in [0, w_max], looking only at crossings where the ray exits the
    solid (occupancy falls through iso along +b). The crossing nearest the
    coarse guess wins (``outward_first`` scans widening widths first) and is
    bisected to a tenth of a voxel. Returns (w_coarse, False) when no
    crossing exists.
    """
    w0 = float(np.clip(w_coarse, 0.0, w_max))
    origin = np.asarray(p, dtype=np.float64) + w0 * np.asarray(b, dtype=np.float64)
    lo, hi = _bounds(field, w0, w_max)
    dw, found = line_iso_crossing(field, origin, b, lo=float(lo), hi=float(hi),
                                  iso=iso, outward_first=outward_first,
                                  falling_only=True)
    if not found:
        return w0, False
    return w0 + dw, True


def refine_width_batch(field: OccupancyField, points, baselines, w_coarse,
                       w_max: float, iso: float = 0.5,
                       outward_first: bool = False):
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    bs = np.atleast_2d(np.asarray(baselines, dtype=np.float64))
    w0 = np.clip(np.asarray(w_coarse, dtype=np.float64).reshape(-1), 0.0, w_max)
    origins = pts + w0[:, None] * bs
    lo, hi = _bounds(field, w0, w_max)
    dws, founds = line_iso_crossing_batch(field, origins, bs, lo, hi, iso=iso,
                                          outward_first=outward_first,
                                          falling_only=True)
    ws = np.where(founds, w0 + dws, w0)
    return ws, founds
