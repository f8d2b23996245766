"""Primitive-bucketed approximation of a fitted grasp field."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import UserError
from ..geomcore.field import shape_confidence
from ..geomcore.sampling import sample_surface
from ..neuralfield.pose import Grasp
from ..neuralfield.width import refine_width_batch
from ..primitives.spheres import label_points
from .records import ObjectRecord

MAX_PER_PRIMITIVE = 5


@dataclass(frozen=True, eq=False)
class ApproxField:
    """Per-primitive grasp lists; the discrete stand-in for the whole field."""

    buckets: dict[int, list[Grasp]]

    @property
    def n_grasps(self) -> int:
        return sum(len(v) for v in self.buckets.values())

    def all_grasps(self) -> list[Grasp]:
        out = []
        for label in sorted(self.buckets):
            out.extend(self.buckets[label])
        return out


def decode_raw(record: ObjectRecord, n_points: int, seed: int = 0,
               refine: bool = True, iso: float = 0.5,
               w_max: float | None = None) -> list[Grasp]:
    """Query the record's field at surface samples and keep valid grasps.

    Widths are refined against the record's occupancy unless ``refine`` is
    off (the geometry-unaware ablation); confidences are the min
    occupancy-gradient norm over the two contacts.
    """
    if record.field is None:
        raise UserError(f"object {record.name} has no fitted field to decode")
    model = record.field
    samples = sample_surface(record.mesh, record.occupancy, n_points, seed=seed)
    out = model.query(samples.points)
    valid = np.nonzero(out.validity > 0.0)[0]
    if len(valid) == 0:
        return []
    pts = samples.points[valid]
    baselines = out.baseline[valid]
    w_lim = w_max if w_max is not None else model.w_max
    if refine:
        widths, _ = refine_width_batch(record.occupancy, pts, baselines,
                                       out.width[valid], w_lim, iso=iso)
    else:
        widths = np.clip(out.width[valid], 0.0, w_lim)

    grasps = []
    for k, i in enumerate(valid):
        g = Grasp(pts[k], float(out.validity[i]), out.approach[i],
                  out.tangential[i], baselines[k], float(widths[k]))
        c = shape_confidence(record.occupancy, np.stack([g.point, g.right_contact]))
        grasps.append(g.with_confidence(float(c.min())))
    return grasps


def _farthest_point_subset(grasps: list[Grasp], k: int) -> list[Grasp]:
    """Diverse subset by greedy farthest-point over left contacts.

    Starts at the highest-confidence grasp (ties to the lowest index).
    """
    if len(grasps) <= k:
        return list(grasps)
    pts = np.stack([g.point for g in grasps])
    conf = np.array([g.confidence for g in grasps])
    chosen = [int(conf.argmax())]
    d2 = ((pts - pts[chosen[0]]) ** 2).sum(axis=1)
    while len(chosen) < k:
        nxt = int(d2.argmax())
        chosen.append(nxt)
        d2 = np.minimum(d2, ((pts - pts[nxt]) ** 2).sum(axis=1))
    return [grasps[i] for i in sorted(chosen)]


def approximate_field(src: ObjectRecord, samples: int = 5000, seed: int = 0,
                      iso: float = 0.5,
                      max_per_primitive: int = MAX_PER_PRIMITIVE) -> ApproxField:
    """Probe the source field and bucket valid grasps by left-contact primitive."""
    grasps = decode_raw(src, samples, seed=seed, iso=iso)
    if not grasps:
        raise UserError(
            f"object {src.name}: field decoded zero valid grasps; cannot approximate")
    labels = label_points(np.stack([g.point for g in grasps]), src.require_primitives())
    buckets: dict[int, list[Grasp]] = {}
    for g, lab in zip(grasps, labels):
        buckets.setdefault(int(lab), []).append(g)
    buckets = {lab: _farthest_point_subset(gs, max_per_primitive)
               for lab, gs in sorted(buckets.items())}
    return ApproxField(buckets)
