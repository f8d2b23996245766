"""Oracle-certified source-object grasp annotation.

Replaces externally annotated grasp datasets: surface points are cast along
the inward normal to find antipodal exit contacts, candidate approach
directions are swept in the plane perpendicular to the baseline, and only
grasps passing the analytic oracle are kept.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..errors import UserError
from ..geomcore.field import OccupancyField, line_iso_crossing
from ..geomcore.mesh import TriMesh
from ..geomcore.sampling import sample_surface
from ..neuralfield.pose import Grasp, GraspLabel
from .gripper import GripperModel
from .oracle import check_grasp

_Z = np.array([0.0, 0.0, 1.0])
_X = np.array([1.0, 0.0, 0.0])
_Y = np.array([0.0, 1.0, 0.0])


@dataclass(frozen=True, eq=False)
class Annotation:
    label: GraspLabel
    grasp: Grasp

    def to_dict(self) -> dict:
        d = self.grasp.to_dict()
        d["antipodal_point"] = [float(x) for x in self.label.antipodal_point]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Annotation":
        grasp = Grasp.from_dict(d)
        label = GraspLabel(grasp.point, np.asarray(d["antipodal_point"]),
                           grasp.approach, grasp.tangential, is_positive=True)
        return cls(label, grasp)


def save_annotations(annotations: list[Annotation], path, extra: dict | None = None) -> None:
    doc = {"format": "nsgf-annotations", "version": 1,
           "grasps": [a.to_dict() for a in annotations]}
    doc.update(extra or {})
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_annotations(path) -> list[Annotation]:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != "nsgf-annotations":
        raise UserError(f"{path}: not an annotations file")
    return [Annotation.from_dict(d) for d in doc["grasps"]]


def cast_antipodal(field: OccupancyField, point, normal, max_width: float,
                   iso: float = 0.5):
    """March inward from a surface point to the exit contact along -normal."""
    b = -np.asarray(normal, dtype=np.float64)
    w, found = line_iso_crossing(field, np.asarray(point, dtype=np.float64), b,
                                 lo=0.0, hi=max_width, iso=iso,
                                 falling_only=True)
    if not found or w <= 0.0:
        return None, None
    return np.asarray(point) + w * b, float(w)


def _farthest_point_order(points: np.ndarray, start: int) -> np.ndarray:
    n = len(points)
    order = np.empty(n, dtype=np.intp)
    order[0] = start
    d2 = ((points - points[start]) ** 2).sum(axis=1)
    for i in range(1, n):
        nxt = int(d2.argmax())
        order[i] = nxt
        d2 = np.minimum(d2, ((points - points[nxt]) ** 2).sum(axis=1))
    return order


def _approach_candidates(b: np.ndarray, k: int) -> np.ndarray:
    # anchor the sweep to the global frame so neighboring contacts see the
    # same candidate directions; labels stay spatially coherent
    helper = _X if abs(b[2]) > 0.9 else _Z
    u = helper - (helper @ b) * b
    u /= np.linalg.norm(u)
    v = np.cross(b, u)
    phis = 2.0 * np.pi * np.arange(k) / k
    return np.cos(phis)[:, None] * u[None, :] + np.sin(phis)[:, None] * v[None, :]


def annotate_source(field: OccupancyField, mesh: TriMesh, gripper: GripperModel,
                    mu: float = 0.5, budget: int = 200, seed: int = 0,
                    iso: float = 0.5, approaches_per_contact: int = 8,
                    candidates: int | None = None) -> list[Annotation]:
    """Sample oracle-certified grasp annotations on the source object.

    Surface candidates are cast along -n to the antipodal contact; for each
    feasible contact pair, ``approaches_per_contact`` directions are swept in
    the plane perpendicular to the baseline and at most one passing grasp per
    pair is kept (preferring the azimuth-consistent direction z-hat x n so
    that neighboring labels agree). Deterministic given the seed; aborts when
    fewer than 10 positives exist.
    """
    if budget < 1:
        raise UserError(f"annotation budget must be >= 1, got {budget}")
    n_candidates = candidates if candidates else max(20 * budget, 1000)
    samples = sample_surface(mesh, field, n_candidates, seed=seed)

    # farthest-point scan order spreads the budget evenly over the surface
    rng = np.random.default_rng(seed + 1)
    order = _farthest_point_order(samples.points, int(rng.integers(n_candidates)))

    out: list[Annotation] = []
    for i in order:
        if len(out) >= budget:
            break
        p = samples.points[i]
        n = samples.normals[i]
        p2, w = cast_antipodal(field, p, n, gripper.max_width, iso)
        if p2 is None:
            continue
        b = (p2 - p) / w
        ref = np.cross(_Z, n)
        best = None
        for j, a in enumerate(_approach_candidates(b, approaches_per_contact)):
            # re-orthogonalize against b (numerical drift from the cast)
            a = a - (a @ b) * b
            a /= np.linalg.norm(a)
            t = np.cross(a, b)
            g = Grasp(p, 1.0, a, t, b, w,
                      confidence=float(samples.confidence[i]))
            if not check_grasp(g, field, gripper, mu, iso).passed:
                continue
            score = (round(float(a @ ref), 9), round(float(a @ _X), 9),
                     round(float(a @ _Y), 9), -j)
            if best is None or score > best[0]:
                best = (score, g)
        if best is None:
            continue
        g = best[1]
        label = GraspLabel(g.point, p2, g.approach, g.tangential, is_positive=True)
        label.enforce_reach(gripper.max_width)
        out.append(Annotation(label, g))

    if len(out) < 10:
        raise UserError(
            f"annotation found only {len(out)} feasible grasps out of "
            f"{n_candidates} candidates (gripper max width {gripper.max_width}); "
            "the shape may be too thick to grasp")
    return out
