"""Shape-aware grasp ranking."""
from __future__ import annotations

import numpy as np

from ..geomcore.field import OccupancyField, shape_confidence
from ..neuralfield.pose import Grasp


def grasp_confidence(g: Grasp, field: OccupancyField, combine: str = "min") -> float:
    """Per-grasp score from the contact-point occupancy-gradient norms.

    ``min`` over the two contacts is the conservative default; ``mean`` is
    exposed as an option.
    """
    c = shape_confidence(field, np.stack([g.point, g.right_contact]))
    return float(c.min() if combine == "min" else c.mean())


def rank_and_select(grasps: list[Grasp], field: OccupancyField,
                    combine: str = "min") -> list[Grasp]:
    """Valid grasps (logit > 0) ordered by descending shape-aware confidence.

    Confidence is recomputed on ``field``; ties keep the input order.
    """
    valid = [(i, g) for i, g in enumerate(grasps) if g.validity > 0.0]
    scored = [(g.with_confidence(grasp_confidence(g, field, combine)), i)
              for i, g in valid]
    scored.sort(key=lambda pair: (-pair[0].confidence, pair[1]))
    return [g for g, _ in scored]
