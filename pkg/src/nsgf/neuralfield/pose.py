"""Grasp configurations, labels, and 6-DoF pose assembly."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import UserError

_ORTHO_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class Grasp:
    """One parallel-jaw configuration anchored at the left finger contact.

    The frame (baseline, tangential, approach) is right-handed orthonormal
    with baseline = tangential x approach; the right contact sits at
    point + width * baseline. ``validity`` is a logit: valid iff > 0.
    """

    point: np.ndarray       # left contact (3,)
    validity: float
    approach: np.ndarray    # unit (3,)
    tangential: np.ndarray  # unit (3,)
    baseline: np.ndarray    # unit (3,), = tangential x approach
    width: float
    confidence: float = 0.0

    def __post_init__(self):
        for name in ("point", "approach", "tangential", "baseline"):
            object.__setattr__(self, name,
                               np.asarray(getattr(self, name), dtype=np.float64).reshape(3))

    @property
    def right_contact(self) -> np.ndarray:
        return self.point + self.width * self.baseline

    def rotation_matrix(self) -> np.ndarray:
        """Columns (baseline, tangential, approach)."""
        return np.stack([self.baseline, self.tangential, self.approach], axis=1)

    def validate(self, max_width: float | None = None) -> None:
        a, t, b = self.approach, self.tangential, self.baseline
        for name, v in (("approach", a), ("tangential", t), ("baseline", b)):
            if abs(np.linalg.norm(v) - 1.0) > _ORTHO_TOL:
                raise UserError(f"grasp {name} vector is not unit length")
        if np.abs(np.cross(t, a) - b).max() > _ORTHO_TOL:
            raise UserError("grasp baseline must equal tangential x approach")
        if abs(a @ t) > _ORTHO_TOL:
            raise UserError("grasp frame is not orthogonal")
        if self.width < 0:
            raise UserError(f"grasp width must be non-negative, got {self.width}")
        if max_width is not None and self.width > max_width + 1e-9:
            raise UserError(f"grasp width {self.width} exceeds gripper max {max_width}")

    def with_confidence(self, confidence: float) -> "Grasp":
        return replace(self, confidence=float(confidence))

    def to_dict(self) -> dict:
        # baseline is derived (tangential x approach) and omitted on disk
        return {
            "point": [float(x) for x in self.point],
            "approach": [float(x) for x in self.approach],
            "tangential": [float(x) for x in self.tangential],
            "width": float(self.width),
            "validity_logit": float(self.validity),
            "confidence": float(self.confidence),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Grasp":
        a = np.asarray(d["approach"], dtype=np.float64)
        t = np.asarray(d["tangential"], dtype=np.float64)
        return cls(np.asarray(d["point"], dtype=np.float64),
                   float(d["validity_logit"]), a, t, np.cross(t, a),
                   float(d["width"]), float(d.get("confidence", 0.0)))


@dataclass(frozen=True, eq=False)
class GraspLabel:
    """Annotated contact: left contact point plus ground-truth grasp attributes."""

    point: np.ndarray            # (3,)
    antipodal_point: np.ndarray  # (3,) right contact, positives only
    approach: np.ndarray         # unit (3,)
    tangential: np.ndarray       # unit (3,)
    is_positive: bool

    def __post_init__(self):
        for name in ("point", "antipodal_point", "approach", "tangential"):
            object.__setattr__(self, name,
                               np.asarray(getattr(self, name), dtype=np.float64).reshape(3))

    def enforce_reach(self, max_width: float) -> None:
        if self.is_positive:
            w = np.linalg.norm(self.antipodal_point - self.point)
            if w > max_width + 1e-9:
                raise UserError(f"label contact span {w:.4f} exceeds gripper max {max_width}")


def assemble_pose(g: Grasp, gripper) -> np.ndarray:
    """4x4 gripper pose: x = baseline, y = tangential, z = approach.

    The frame origin is the wrist: mid-contact minus finger_depth along the
    approach direction.
    """
    g.validate(max_width=gripper.max_width)
    pose = np.eye(4)
    pose[:3, :3] = g.rotation_matrix()
    pose[:3, 3] = (g.point + 0.5 * g.width * g.baseline
                   - gripper.finger_depth * g.approach)
    return pose
