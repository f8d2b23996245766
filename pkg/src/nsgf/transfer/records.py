"""Full object-centric records tying geometry, primitives, and the field."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import UserError
from ..geomcore.field import OccupancyField
from ..geomcore.mesh import TriMesh
from ..geomcore.shapes import Sim3
from ..neuralfield.model import NsgfModel
from ..primitives.spheres import SpherePrimitiveSet


@dataclass(eq=False)
class ObjectRecord:
    """Geometry tuple (pose, mesh, primitives) plus occupancy and optional field."""

    name: str
    pose: Sim3
    mesh: TriMesh
    primitives: SpherePrimitiveSet | None
    occupancy: OccupancyField
    field: NsgfModel | None = None

    def __post_init__(self):
        if self.mesh.is_empty:
            raise UserError(f"object {self.name}: empty mesh")
        if len(self.mesh.faces) < 4:
            raise UserError(f"object {self.name}: meshes with < 4 faces are rejected")
        if self.field is not None:
            self._check_field_covers_mesh(self.field)

    def require_primitives(self) -> SpherePrimitiveSet:
        if self.primitives is None:
            raise UserError(f"object {self.name} has no fitted primitives")
        return self.primitives

    def _check_field_covers_mesh(self, field: NsgfModel) -> None:
        lo = self.mesh.vertices.min(axis=0)
        hi = self.mesh.vertices.max(axis=0)
        if np.any(lo < field.grid_bbox_min - 1e-9) or np.any(hi > field.grid_bbox_max + 1e-9):
            raise UserError(
                f"object {self.name}: field feature grid does not cover the mesh bbox")

    def with_field(self, field: NsgfModel) -> "ObjectRecord":
        self._check_field_covers_mesh(field)
        field.bind_field(self.occupancy)
        return replace(self, field=field)
