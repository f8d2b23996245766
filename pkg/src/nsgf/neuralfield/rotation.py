"""Continuous 6-D rotation representation (Gram-Schmidt to a grasp frame)."""
from __future__ import annotations

import numpy as np

from ..errors import UserError

_EPS = 1e-9


def rot6d_to_frame(six) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Map a 6-vector to the orthonormal grasp frame (approach, tangential, baseline).

    approach = normalize(six[:3]); tangential = normalize of six[3:] with its
    approach component removed; baseline = tangential x approach. The result
    is right-handed with det +1.
    """
    v = np.asarray(six, dtype=np.float64).reshape(6)
    a_raw, t_raw = v[:3], v[3:]
    na = np.linalg.norm(a_raw)
    if na < _EPS:
        raise UserError("rot6d: first 3-vector is (near) zero")
    a = a_raw / na
    t_ortho = t_raw - (t_raw @ a) * a
    nt = np.linalg.norm(t_ortho)
    if nt < _EPS:
        raise UserError("rot6d: second 3-vector is (near) parallel to the first")
    t = t_ortho / nt
    b = np.cross(t, a)
    return a, t, b


def frame_to_rot6d(approach, tangential) -> np.ndarray:
    return np.concatenate([np.asarray(approach, dtype=np.float64),
                           np.asarray(tangential, dtype=np.float64)])


def rotation_about_axis(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix about a unit axis."""
    k = np.asarray(axis, dtype=np.float64)
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + np.sin(angle) * kx + (1 - np.cos(angle)) * (kx @ kx)


def minimal_rotation_between(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Smallest rotation taking unit vector u onto unit vector v."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    axis = np.cross(u, v)
    s = np.linalg.norm(axis)
    c = float(np.clip(u @ v, -1.0, 1.0))
    if s < 1e-12:
        if c > 0:
            return np.eye(3)
        # antiparallel: rotate half-turn about any perpendicular axis
        helper = np.array([1.0, 0.0, 0.0]) if abs(u[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        perp = np.cross(u, helper)
        perp /= np.linalg.norm(perp)
        return rotation_about_axis(perp, np.pi)
    return rotation_about_axis(axis / s, float(np.arctan2(s, c)))
