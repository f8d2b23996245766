"""Kernel backend selection.

The hot per-point loops (trilinear queries, finite-difference gradients,
iso-surface line searches) exist twice: a compiled Cython core and a pure
numpy fallback with identical semantics. The compiled core is used when the
extension built; set ``NSGF_KERNELS=numpy`` to force the fallback, e.g. for
benchmarking. ``NSGF_THREADS`` caps the compiled kernels' OpenMP width
(default: all cores); the fallback is single-threaded numpy.
"""
from __future__ import annotations

import os

from . import numpy_backend

_forced = os.environ.get("NSGF_KERNELS", "").strip().lower()

if _forced == "numpy":
    _impl = numpy_backend
    BACKEND = "numpy"
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:
        if _forced == "cython":
            raise ImportError(
                "NSGF_KERNELS=cython requested but the compiled core is not "
                "available; rebuild with `pip install -e .`")
        _impl = numpy_backend
        BACKEND = "numpy"


def thread_cap() -> int:
    """Requested data-parallel width; 0 means backend default (all cores)."""
    raw = os.environ.get("NSGF_THREADS", "").strip()
    if not raw:
        return 0
    n = int(raw)
    return max(n, 1)


def available_backends() -> dict:
    """Importable backends by name, for parity tests and benchmarks."""
    out = {"numpy": numpy_backend}
    try:
        from . import _core
        out["cython"] = _core
    except ImportError:
        pass
    return out


def trilinear(data, bbox_min, voxel, pts):
    if BACKEND == "cython":
        return _impl.trilinear(data, bbox_min, voxel, pts, thread_cap())
    return _impl.trilinear(data, bbox_min, voxel, pts)


def trilinear_grad(data, bbox_min, voxel, pts):
    if BACKEND == "cython":
        return _impl.trilinear_grad(data, bbox_min, voxel, pts, thread_cap())
    return _impl.trilinear_grad(data, bbox_min, voxel, pts)


def line_iso_crossing(data, bbox_min, voxel, origin, direction, lo, hi, iso,
                      step, tol, outward_first=False, falling_only=False):
    return _impl.line_iso_crossing(data, bbox_min, voxel, origin, direction,
                                   float(lo), float(hi), float(iso),
                                   float(step), float(tol), outward_first,
                                   falling_only)


def line_iso_crossing_batch(data, bbox_min, voxel, origins, directions, los,
                            his, iso, step, tol, outward_first=False,
                            falling_only=False):
    if BACKEND == "cython":
        return _impl.line_iso_crossing_batch(
            data, bbox_min, voxel, origins, directions, los, his,
            float(iso), float(step), float(tol), outward_first, falling_only,
            thread_cap())
    return _impl.line_iso_crossing_batch(
        data, bbox_min, voxel, origins, directions, los, his,
        float(iso), float(step), float(tol), outward_first, falling_only)
