"""Synthetic shape families: analytic SDFs, occupancy sampling, canonicalization.

Categories are parametric stand-ins for scanned object classes:

* ``bottle`` — surface of revolution around z with a piecewise-linear radius
  profile (a constant profile is a cylinder),
* ``bowl``   — spherical shell with a cap cut,
* ``box``    — axis-aligned box.

``generate_shape`` canonicalizes: the object is centered at its bbox centroid
and uniformly scaled so the largest extent is 1.0. Every downstream quantity
(fields, grasps, widths) lives in this canonical frame; the SIM(3) pose is
carried as data only.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import UserError
from .field import OccupancyField

CATEGORIES = ("bottle", "bowl", "box")


@dataclass(frozen=True)
class Sim3:
    """7-DoF similarity transform: x_world = scale * R(quat) x + translation."""

    quat: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)  # (w, x, y, z)
    translation: tuple[float, float, float] = (0.0, 0.0, 0.0)
    scale: float = 1.0

    def __post_init__(self):
        q = np.asarray(self.quat, dtype=np.float64)
        if abs(np.linalg.norm(q) - 1.0) > 1e-9:
            raise UserError(f"pose quaternion must be unit length, got {self.quat}")
        if self.scale <= 0:
            raise UserError(f"pose scale must be positive, got {self.scale}")

    def rotation_matrix(self) -> np.ndarray:
        w, x, y, z = self.quat
        return np.array([
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ])

    def to_dict(self) -> dict:
        return {"quat": list(self.quat), "translation": list(self.translation),
                "scale": self.scale}

    @classmethod
    def from_dict(cls, d: dict) -> "Sim3":
        return cls(tuple(d.get("quat", (1, 0, 0, 0))),
                   tuple(d.get("translation", (0, 0, 0))),
                   float(d.get("scale", 1.0)))


_PARAM_RANGES = {
    "bottle": {"height": (0.05, 4.0)},
    "bowl": {"radius": (0.01, 2.0), "cap_angle": (0.15, math.pi)},
    "box": {},
}


@dataclass(frozen=True)
class ShapeSpec:
    """Category + named scalar parameters + carried SIM(3) pose."""

    category: str
    params: dict
    pose: Sim3 = field(default_factory=Sim3)
    seed: int = 0

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise UserError(f"unknown category {self.category!r}; expected one of {CATEGORIES}")
        validate_params(self.category, self.params)

    @classmethod
    def cylinder(cls, radius: float, height: float = 1.0, pose: Sim3 | None = None,
                 seed: int = 0) -> "ShapeSpec":
        """Constant-profile bottle."""
        return cls("bottle", {"height": height, "radii": [radius, radius]},
                   pose or Sim3(), seed)

    def to_dict(self) -> dict:
        return {"category": self.category, "params": dict(self.params),
                "pose": self.pose.to_dict(), "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "ShapeSpec":
        try:
            return cls(d["category"], dict(d["params"]),
                       Sim3.from_dict(d.get("pose", {})), int(d.get("seed", 0)))
        except KeyError as exc:
            raise UserError(f"shape spec missing key {exc}") from exc

    @classmethod
    def from_json(cls, path) -> "ShapeSpec":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def validate_params(category: str, params: dict) -> None:
    for name, (lo, hi) in _PARAM_RANGES[category].items():
        if name not in params:
            raise UserError(f"{category}: missing parameter {name!r}")
        v = params[name]
        if not (lo <= v <= hi):
            raise UserError(f"{category}: parameter {name!r}={v} outside [{lo}, {hi}]")
    if category == "bottle":
        radii = params.get("radii")
        if not radii or len(radii) < 2 or len(radii) > 16:
            raise UserError("bottle: parameter 'radii' needs 2..16 profile knots")
        if min(radii) <= 0.005 or max(radii) > 2.0:
            raise UserError(f"bottle: parameter 'radii' values must lie in (0.005, 2], got {radii}")
    elif category == "bowl":
        t = params.get("thickness")
        if t is None:
            raise UserError("bowl: missing parameter 'thickness'")
        if not (0.0 < t <= params["radius"]):
            raise UserError(f"bowl: parameter 'thickness'={t} must lie in (0, radius]")
    elif category == "box":
        he = params.get("half_extents")
        if he is None or len(he) != 3:
            raise UserError("box: parameter 'half_extents' must be a 3-vector")
        if min(he) <= 0.005 or max(he) > 2.0:
            raise UserError(f"box: parameter 'half_extents' values must lie in (0.005, 2], got {he}")


# --- local-frame SDFs (vectorized, exact) ---

def _sdf_box(pts: np.ndarray, half_extents: np.ndarray) -> np.ndarray:
    q = np.abs(pts) - half_extents[None, :]
    outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
    inside = np.minimum(q.max(axis=1), 0.0)
    return outside + inside


def _sdf_bowl(pts: np.ndarray, radius: float, thickness: float,
              cap_angle: float) -> np.ndarray:
    d = np.linalg.norm(pts, axis=1)
    if thickness >= radius:
        shell = d - radius
    else:
        shell = np.maximum(d - radius, (radius - thickness) - d)
    # keep polar angles from the -z pole up to cap_angle: cut above z_cut
    z_cut = -radius * math.cos(cap_angle)
    return np.maximum(shell, pts[:, 2] - z_cut)


def _sdf_revolved(pts: np.ndarray, radii: np.ndarray, height: float) -> np.ndarray:
    """Exact SDF of the solid of revolution with piecewise-linear profile.

    The meridian boundary in the (rho, z) half-plane runs
    (0,-h/2) -> (r0,-h/2) -> ... -> (rk,h/2) -> (0,h/2); distance is taken to
    that polyline (the axis closure is interior, not surface), sign from the
    even-odd test on the closed polygon.
    """
    h2 = height / 2.0
    k = len(radii)
    zs = np.linspace(-h2, h2, k)
    verts = [(0.0, -h2)]
    verts += [(float(r), float(z)) for r, z in zip(radii, zs)]
    verts += [(0.0, h2)]
    poly = np.asarray(verts)

    rho = np.hypot(pts[:, 0], pts[:, 1])
    z = pts[:, 2]
    q = np.stack([rho, z], axis=1)

    # distance to open polyline
    a = poly[:-1][None, :, :]
    b = poly[1:][None, :, :]
    ab = b - a
    denom = np.maximum((ab * ab).sum(axis=2), 1e-30)
    tseg = ((q[:, None, :] - a) * ab).sum(axis=2) / denom
    tseg = np.clip(tseg, 0.0, 1.0)
    proj = a + tseg[:, :, None] * ab
    dist = np.linalg.norm(q[:, None, :] - proj, axis=2).min(axis=1)

    # even-odd inside test on the closed polygon (closure edge at rho = 0)
    closed = np.vstack([poly, poly[:1]])
    inside = np.zeros(len(q), dtype=bool)
    for (x1, y1), (x2, y2) in zip(closed[:-1], closed[1:]):
        if y1 == y2:
            continue
        cond = (y1 > z) != (y2 > z)
        xint = x1 + (z - y1) / (y2 - y1) * (x2 - x1)
        inside ^= cond & (rho < xint)
    return np.where(inside, -dist, dist)


class AnalyticShape:
    """Canonical-frame analytic geometry handle.

    Answers exact signed distance, outward normals, and the smoothed
    occupancy sigma(-sdf/beta). Used by oracles and tests; the pipeline itself
    only ever sees sampled occupancy grids.
    """

    def __init__(self, spec: ShapeSpec, beta: float, center: np.ndarray,
                 scale: float, bbox_min: np.ndarray, bbox_max: np.ndarray):
        self.spec = spec
        self.beta = float(beta)
        self._center = center          # canonicalization offset, local frame
        self._scale = scale            # canonicalization scale (max extent)
        self.bbox_min = bbox_min       # canonical-frame grid bbox
        self.bbox_max = bbox_max

    def sdf(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        pose = self.spec.pose
        world = pts * self._scale + self._center[None, :]
        rot = pose.rotation_matrix()
        local = (world - np.asarray(pose.translation)[None, :]) @ rot / pose.scale
        cat, p = self.spec.category, self.spec.params
        if cat == "box":
            d = _sdf_box(local, np.asarray(p["half_extents"], dtype=np.float64))
        elif cat == "bowl":
            d = _sdf_bowl(local, p["radius"], p["thickness"], p["cap_angle"])
        else:
            d = _sdf_revolved(local, np.asarray(p["radii"], dtype=np.float64),
                              p["height"])
        d = d * pose.scale / self._scale
        if np.asarray(points).ndim == 1:
            return d[0]
        return d

    def occupancy(self, points: np.ndarray) -> np.ndarray:
        s = -np.asarray(self.sdf(points)) / self.beta
        return 1.0 / (1.0 + np.exp(-s))

    def normal(self, points: np.ndarray, h: float = 1e-6) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        g = np.empty_like(pts)
        for a in range(3):
            off = np.zeros(3)
            off[a] = h
            g[:, a] = (self.sdf(pts + off) - self.sdf(pts - off)) / (2 * h)
        g /= np.maximum(np.linalg.norm(g, axis=1, keepdims=True), 1e-15)
        if np.asarray(points).ndim == 1:
            return g[0]
        return g


def _local_bbox(spec: ShapeSpec) -> tuple[np.ndarray, np.ndarray]:
    cat, p = spec.category, spec.params
    if cat == "box":
        he = np.asarray(p["half_extents"], dtype=np.float64)
        return -he, he
    if cat == "bowl":
        r, theta = p["radius"], p["cap_angle"]
        rho = r if theta >= math.pi / 2 else r * math.sin(theta)
        return (np.array([-rho, -rho, -r]),
                np.array([rho, rho, -r * math.cos(theta)]))
    rho = max(p["radii"])
    h2 = p["height"] / 2.0
    return np.array([-rho, -rho, -h2]), np.array([rho, rho, h2])


def generate_shape(spec: ShapeSpec, dims, padding: float = 0.1
                   ) -> tuple[OccupancyField, AnalyticShape]:
    """Sample the canonicalized occupancy of ``spec`` on a node grid.

    The canonical frame centers the posed shape at its bbox centroid and
    scales the largest extent to 1.0; the grid covers [-0.5-padding,
    0.5+padding] per axis. beta is one voxel edge, which keeps gradients
    informative in a 2-3 voxel band around the surface.
    """
    if isinstance(dims, int):
        dims = (dims, dims, dims)
    if min(dims) < 16:
        raise UserError(f"grid dims must be >= 16 per axis, got {dims}")

    lo, hi = _local_bbox(spec)
    corners = np.array([[x, y, z] for x in (lo[0], hi[0])
                        for y in (lo[1], hi[1]) for z in (lo[2], hi[2])])
    pose = spec.pose
    world = pose.scale * corners @ pose.rotation_matrix().T + np.asarray(pose.translation)
    wmin, wmax = world.min(axis=0), world.max(axis=0)
    center = (wmin + wmax) / 2.0
    scale = float((wmax - wmin).max())

    half = 0.5 + padding
    bbox_min = np.full(3, -half)
    bbox_max = np.full(3, half)
    beta = (2.0 * half) / (max(dims) - 1)

    shape = AnalyticShape(spec, beta, center, scale, bbox_min, bbox_max)
    fld = OccupancyField.from_function(shape.occupancy, bbox_min, bbox_max,
                                       dims, smoothing_beta=beta)
    return fld, shape
