"""Occupancy-probability voxel grids with continuous trilinear queries.

The grid stores node values: ``data[i, j, k]`` is the occupancy at
``bbox_min + (i, j, k) * voxel_size``. All continuous queries go through the
kernel backend (compiled or numpy, selected at import).
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .. import _kernels
from ..errors import UserError

GRID_MAGIC = b"NSGF"
GRID_FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class OccupancyField:
    """Axis-aligned voxel grid of occupancy probabilities in [0, 1]."""

    data: np.ndarray          # (nx, ny, nz) float64, values in [0, 1]
    bbox_min: np.ndarray      # (3,)
    bbox_max: np.ndarray      # (3,)
    smoothing_beta: float     # softness of the analytic occupancy transition

    def __post_init__(self):
        data = np.ascontiguousarray(np.asarray(self.data, dtype=np.float64))
        bmin = np.asarray(self.bbox_min, dtype=np.float64).reshape(3)
        bmax = np.asarray(self.bbox_max, dtype=np.float64).reshape(3)
        if data.ndim != 3 or min(data.shape) < 2:
            raise UserError(f"occupancy grid must be 3-D with >= 2 nodes per axis, got {data.shape}")
        if not np.all(bmax > bmin):
            raise UserError(f"bbox_max must exceed bbox_min per axis, got {bmin} .. {bmax}")
        if data.size and (data.min() < 0.0 or data.max() > 1.0):
            raise UserError("occupancy values must lie in [0, 1]")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "bbox_min", bmin)
        object.__setattr__(self, "bbox_max", bmax)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape

    @property
    def voxel_size(self) -> np.ndarray:
        return (self.bbox_max - self.bbox_min) / (np.asarray(self.dims) - 1)

    @property
    def min_voxel(self) -> float:
        return float(self.voxel_size.min())

    def node_positions(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(np.linspace(self.bbox_min[a], self.bbox_max[a], self.dims[a])
                     for a in range(3))

    @classmethod
    def from_function(cls, fn, bbox_min, bbox_max, dims, smoothing_beta: float) -> "OccupancyField":
        """Sample ``fn(points) -> occupancy`` on the grid nodes."""
        bmin = np.asarray(bbox_min, dtype=np.float64)
        bmax = np.asarray(bbox_max, dtype=np.float64)
        axes = [np.linspace(bmin[a], bmax[a], dims[a]) for a in range(3)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
        values = np.asarray(fn(grid), dtype=np.float64).reshape(dims)
        return cls(values, bmin, bmax, float(smoothing_beta))


def query_occupancy(field: OccupancyField, points: np.ndarray,
                    return_flags: bool = False):
    """Trilinear occupancy at ``points`` ((3,) or (N, 3)).

    Points outside the bbox return the clamped boundary value; the flag array
    marks them when ``return_flags`` is set.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    vals, clamped = _kernels.trilinear(field.data, field.bbox_min,
                                       field.voxel_size, np.ascontiguousarray(pts))
    single = np.asarray(points).ndim == 1
    if single:
        vals = float(vals[0])
        clamped = bool(clamped[0])
    if return_flags:
        return vals, clamped
    return vals


def occupancy_gradient(field: OccupancyField, points: np.ndarray,
                       return_flags: bool = False):
    """Spatial gradient of the trilinear field, central differences h = voxel/2.

    Within one voxel of the bbox the scheme degrades to one-sided differences
    (flagged).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    grads, onesided = _kernels.trilinear_grad(field.data, field.bbox_min,
                                              field.voxel_size,
                                              np.ascontiguousarray(pts))
    single = np.asarray(points).ndim == 1
    if single:
        grads = grads[0]
        onesided = bool(onesided[0])
    if return_flags:
        return grads, onesided
    return grads


def shape_confidence(field: OccupancyField, points: np.ndarray):
    """Norm of the occupancy gradient; sharper surfaces score higher."""
    grads = occupancy_gradient(field, points)
    return np.linalg.norm(grads, axis=-1)


def surface_normals(field: OccupancyField, points: np.ndarray) -> np.ndarray:
    """Outward unit normals: occupancy decreases outward, so n = -grad/|grad|."""
    grads = np.atleast_2d(occupancy_gradient(field, points))
    norms = np.linalg.norm(grads, axis=1)
    safe = np.maximum(norms, 1e-15)
    normals = -grads / safe[:, None]
    normals[norms < 1e-15] = np.array([0.0, 0.0, 1.0])
    if np.asarray(points).ndim == 1:
        return normals[0]
    return normals


def line_iso_crossing(field: OccupancyField, origin, direction, lo: float,
                      hi: float, iso: float = 0.5, step: float | None = None,
                      tol: float | None = None, outward_first: bool = False,
                      falling_only: bool = False):
    """Nearest ``iso`` crossing along origin + t*direction for t in [lo, hi].

    ``falling_only`` restricts the search to crossings where the field drops
    through iso with increasing t (the ray exiting the solid).
    """
    if step is None:
        step = field.min_voxel * 0.5
    if tol is None:
        tol = field.min_voxel * 0.1
    return _kernels.line_iso_crossing(
        field.data, field.bbox_min, field.voxel_size,
        np.ascontiguousarray(origin, dtype=np.float64),
        np.ascontiguousarray(direction, dtype=np.float64),
        lo, hi, iso, step, tol, outward_first, falling_only)


def line_iso_crossing_batch(field: OccupancyField, origins, directions, los,
                            his, iso: float = 0.5, step: float | None = None,
                            tol: float | None = None,
                            outward_first: bool = False,
                            falling_only: bool = False):
    if step is None:
        step = field.min_voxel * 0.5
    if tol is None:
        tol = field.min_voxel * 0.1
    return _kernels.line_iso_crossing_batch(
        field.data, field.bbox_min, field.voxel_size,
        np.ascontiguousarray(origins, dtype=np.float64),
        np.ascontiguousarray(directions, dtype=np.float64),
        np.ascontiguousarray(los, dtype=np.float64),
        np.ascontiguousarray(his, dtype=np.float64),
        iso, step, tol, outward_first, falling_only)


def save_grid(field: OccupancyField, path) -> None:
    """Write the binary grid format.

    Layout (little-endian): magic "NSGF", format version u16, dims 3xu32,
    bbox 6xf64 (min then max), beta f64, then nx*ny*nz f32 node values with
    x varying fastest.
    """
    dims = field.dims
    header = GRID_MAGIC + struct.pack("<H", GRID_FORMAT_VERSION)
    header += struct.pack("<3I", *dims)
    header += struct.pack("<6d", *field.bbox_min, *field.bbox_max)
    header += struct.pack("<d", field.smoothing_beta)
    payload = field.data.astype("<f4").ravel(order="F").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def load_grid(path) -> OccupancyField:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != GRID_MAGIC:
        raise UserError(f"{path}: not an occupancy grid file (bad magic)")
    (version,) = struct.unpack_from("<H", raw, 4)
    if version != GRID_FORMAT_VERSION:
        raise UserError(f"{path}: unsupported grid format version {version}")
    dims = struct.unpack_from("<3I", raw, 6)
    bbox = struct.unpack_from("<6d", raw, 18)
    (beta,) = struct.unpack_from("<d", raw, 66)
    expected = 74 + 4 * dims[0] * dims[1] * dims[2]
    if len(raw) != expected:
        raise UserError(f"{path}: truncated grid payload ({len(raw)} != {expected} bytes)")
    data = np.frombuffer(raw, dtype="<f4", offset=74).astype(np.float64)
    data = data.reshape(dims, order="F")
    return OccupancyField(data, np.array(bbox[:3]), np.array(bbox[3:]), beta)
