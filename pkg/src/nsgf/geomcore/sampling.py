"""Area-uniform surface sampling with normals and shape-aware confidence."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import UserError
from .field import OccupancyField, shape_confidence
from .mesh import TriMesh


@dataclass(frozen=True, eq=False)
class SurfaceSample:
    point: np.ndarray       # (3,)
    normal: np.ndarray      # unit (3,)
    confidence: float       # >= 0


@dataclass(frozen=True, eq=False)
class SurfaceSamples:
    """Batch of surface samples; indexable like a list of SurfaceSample."""

    points: np.ndarray       # (N, 3)
    normals: np.ndarray      # (N, 3) unit
    confidence: np.ndarray   # (N,)

    def __len__(self) -> int:
        return len(self.points)

    def __getitem__(self, i):
        if isinstance(i, (int, np.integer)):
            return SurfaceSample(self.points[i], self.normals[i],
                                 float(self.confidence[i]))
        return SurfaceSamples(self.points[i], self.normals[i], self.confidence[i])

    def transformed(self, offset=None, scale: float = 1.0) -> "SurfaceSamples":
        pts = self.points * scale
        if offset is not None:
            pts = pts + np.asarray(offset, dtype=np.float64)[None, :]
        return SurfaceSamples(pts, self.normals.copy(), self.confidence.copy())


def sample_surface(mesh: TriMesh, field: OccupancyField, count: int,
                   seed: int = 0) -> SurfaceSamples:
    """Draw ``count`` area-weighted uniform samples on the mesh.

    Each sample carries the barycentric vertex-normal interpolation
    (renormalized) and the occupancy-gradient confidence at the point.
    """
    if mesh.is_empty:
        raise UserError("cannot sample an empty mesh")
    if count < 1:
        raise UserError(f"sample count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    areas = mesh.face_areas()
    total = areas.sum()
    if total <= 0:
        raise UserError("mesh has zero surface area")
    face_ids = rng.choice(len(areas), size=count, p=areas / total)

    u = rng.random(count)
    v = rng.random(count)
    su = np.sqrt(u)
    b0 = 1.0 - su
    b1 = su * (1.0 - v)
    b2 = su * v

    tri = mesh.vertices[mesh.faces[face_ids]]          # (N, 3, 3)
    pts = b0[:, None] * tri[:, 0] + b1[:, None] * tri[:, 1] + b2[:, None] * tri[:, 2]

    nrm = mesh.vertex_normals[mesh.faces[face_ids]]
    normals = b0[:, None] * nrm[:, 0] + b1[:, None] * nrm[:, 1] + b2[:, None] * nrm[:, 2]
    lens = np.linalg.norm(normals, axis=1)
    normals = normals / np.maximum(lens, 1e-15)[:, None]
    normals[lens < 1e-15] = np.array([0.0, 0.0, 1.0])

    conf = shape_confidence(field, pts)
    return SurfaceSamples(pts, normals, conf)
