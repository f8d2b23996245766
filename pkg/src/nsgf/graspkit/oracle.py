"""Analytic grasp oracle: antipodal friction-cone test + collision lattice.

Stands in for physics-simulator filtering. A grasp passes when both contact
normals lie inside the friction cone around the baseline and no lattice point
inside the gripper's finger/palm boxes is occupied.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..geomcore.field import (OccupancyField, line_iso_crossing, query_occupancy,
                              surface_normals)
from ..neuralfield.pose import Grasp
from .gripper import GripperModel

_WORST_ANGLE = math.pi  # reported when contacts cannot be projected


@dataclass(frozen=True)
class GraspVerdict:
    antipodal_ok: bool
    collision_free: bool
    contact_angles: tuple[float, float]  # radians, normal vs (-/+) baseline

    @property
    def passed(self) -> bool:
        return self.antipodal_ok and self.collision_free


def _project_contact(field: OccupancyField, point: np.ndarray, baseline: np.ndarray,
                     max_voxels: float, iso: float):
    limit = max_voxels * field.min_voxel
    t, found = line_iso_crossing(field, point, baseline, lo=-limit, hi=limit,
                                 iso=iso)
    if not found:
        return None
    return point + t * baseline


def collision_lattice(gripper: GripperModel, width: float, spacing: float
                      ) -> np.ndarray:
    """Cell-centered probe points of all collision boxes, grasp-frame coords.

    Cell centering keeps probes strictly inside the box faces, so fingertips
    flush with the contact surface do not self-report collisions.
    """
    pts = []
    for lo, hi in gripper.collision_boxes(width):
        ext = hi - lo
        counts = np.maximum(np.ceil(ext / spacing).astype(int), 1)
        axes = [lo[a] + (np.arange(counts[a]) + 0.5) * ext[a] / counts[a]
                for a in range(3)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
        pts.append(grid)
    return np.concatenate(pts, axis=0)


def check_grasp(g: Grasp, field: OccupancyField, gripper: GripperModel,
                mu: float = 0.5, iso: float = 0.5,
                table_z: float | None = None) -> GraspVerdict:
    """Analytic antipodal + collision verdict for one grasp.

    Contacts are projected onto the iso-surface along the baseline (rejected
    if they move more than 2 voxels or leave the grid); the friction cone
    half-angle is atan(mu). Collision probes the finger/palm boxes on a
    half-voxel lattice against occupancy >= iso; ``table_z`` additionally
    rejects gripper volume below a table plane.
    """
    g.validate(max_width=gripper.max_width)
    cone = math.atan(mu)
    c1 = g.point
    c2 = g.point + g.width * g.baseline

    angles = [_WORST_ANGLE, _WORST_ANGLE]
    antipodal_ok = False
    _, clamped1 = query_occupancy(field, c1, return_flags=True)
    _, clamped2 = query_occupancy(field, c2, return_flags=True)
    if not (clamped1 or clamped2):
        p1 = _project_contact(field, c1, g.baseline, 2.0, iso)
        p2 = _project_contact(field, c2, g.baseline, 2.0, iso)
        if p1 is not None and p2 is not None:
            n1 = surface_normals(field, p1)
            n2 = surface_normals(field, p2)
            angles[0] = float(np.arccos(np.clip(n1 @ (-g.baseline), -1.0, 1.0)))
            angles[1] = float(np.arccos(np.clip(n2 @ g.baseline, -1.0, 1.0)))
            antipodal_ok = angles[0] <= cone and angles[1] <= cone

    spacing = field.min_voxel * 0.5
    local = collision_lattice(gripper, g.width, spacing)
    mid = g.point + 0.5 * g.width * g.baseline
    world = mid[None, :] + local @ g.rotation_matrix().T
    occ = query_occupancy(field, world)
    collision_free = bool(np.all(occ < iso))
    if table_z is not None and np.any(world[:, 2] < table_z):
        collision_free = False

    return GraspVerdict(antipodal_ok, collision_free, (angles[0], angles[1]))


def check_grasps(grasps: list[Grasp], field: OccupancyField,
                 gripper: GripperModel, mu: float = 0.5, iso: float = 0.5,
                 table_z: float | None = None) -> list[GraspVerdict]:
    return [check_grasp(g, field, gripper, mu, iso, table_z) for g in grasps]
