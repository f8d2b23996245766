"""Parallel-jaw gripper geometry in canonical units."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import UserError


@dataclass(frozen=True)
class GripperModel:
    """Finger/palm boxes of a parallel-jaw gripper, canonical units.

    Defaults are shaped after a two-finger research gripper scaled to
    unit-extent objects.
    """

    max_width: float = 0.25
    finger_depth: float = 0.12
    finger_thickness: float = 0.03
    palm_extent: tuple[float, float, float] = (0.30, 0.06, 0.06)

    def __post_init__(self):
        vals = (self.max_width, self.finger_depth, self.finger_thickness,
                *self.palm_extent)
        if any(v <= 0 for v in vals):
            raise UserError("gripper dimensions must be positive")
        if self.max_width >= 1.0:
            raise UserError(f"max_width must be < 1 canonical unit, got {self.max_width}")

    def collision_boxes(self, width: float) -> list[tuple[np.ndarray, np.ndarray]]:
        """(lo, hi) corners of the finger and palm boxes in the grasp frame.

        Frame: x = baseline, y = tangential, z = approach, origin at the
        mid-contact point. Fingertips lie in the contact plane (z = 0) and
        the body extends backwards along -z.
        """
        fth = self.finger_thickness
        fd = self.finger_depth
        px, py, pz = self.palm_extent
        half_w = width / 2.0
        return [
            (np.array([half_w, -fth / 2, -fd]),
             np.array([half_w + fth, fth / 2, 0.0])),
            (np.array([-half_w - fth, -fth / 2, -fd]),
             np.array([-half_w, fth / 2, 0.0])),
            (np.array([-px / 2, -py / 2, -fd - pz]),
             np.array([px / 2, py / 2, -fd])),
        ]

    def display_mesh(self, width: float):
        """Triangle mesh of the finger/palm boxes (grasp-frame coords), for export."""
        from ..geomcore.mesh import TriMesh

        verts, faces, normals = [], [], []
        for lo, hi in self.collision_boxes(width):
            base = len(verts)
            corners = np.array([[x, y, z] for x in (lo[0], hi[0])
                                for y in (lo[1], hi[1]) for z in (lo[2], hi[2])])
            # two triangles per face, vertices duplicated per face for flat normals
            for axis in range(3):
                for side in (0, 1):
                    ids = [c for c in range(8) if (corners[c][axis] == (hi if side else lo)[axis])]
                    quad = corners[ids]
                    n = np.zeros(3)
                    n[axis] = 1.0 if side else -1.0
                    s = len(verts)
                    verts.extend(quad)
                    normals.extend([n] * 4)
                    order = [0, 1, 3, 0, 3, 2] if side else [0, 3, 1, 0, 2, 3]
                    faces.append([s + order[0], s + order[1], s + order[2]])
                    faces.append([s + order[3], s + order[4], s + order[5]])
            del base
        return TriMesh(np.asarray(verts, dtype=np.float64),
                       np.asarray(faces, dtype=np.int64),
                       np.asarray(normals, dtype=np.float64))

    def to_dict(self) -> dict:
        return {"max_width": self.max_width, "finger_depth": self.finger_depth,
                "finger_thickness": self.finger_thickness,
                "palm_extent": list(self.palm_extent)}

    @classmethod
    def from_dict(cls, d: dict) -> "GripperModel":
        return cls(float(d.get("max_width", 0.25)),
                   float(d.get("finger_depth", 0.12)),
                   float(d.get("finger_thickness", 0.03)),
                   tuple(d.get("palm_extent", (0.30, 0.06, 0.06))))
