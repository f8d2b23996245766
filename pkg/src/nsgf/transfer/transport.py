"""Per-grasp transport between corresponding primitive sets."""
from __future__ import annotations

import numpy as np

from ..errors import UserError
from ..geomcore.field import line_iso_crossing, shape_confidence, surface_normals
from ..neuralfield.pose import Grasp
from ..neuralfield.rotation import minimal_rotation_between
from ..neuralfield.width import refine_width
from ..primitives.spheres import label_points
from .records import ObjectRecord

PROJECTION_LIMIT_VOXELS = 5.0


def transport_grasp(g_src: Grasp, src: ObjectRecord, tgt: ObjectRecord,
                    w_max: float, iso: float = 0.5,
                    refine: bool = True) -> Grasp | None:
    """Carry one source grasp onto the target instance.

    Steps: (1) label both contacts against the source primitives; (2) shift
    by the averaged offset of the two corresponding target primitives; (3)
    project the shifted contacts onto the target iso-surface along the old
    baseline (None when either moves more than 5 voxels); (4) re-align the
    baseline to the contact-normal difference, rotating the whole frame
    minimally; (5) re-run width refinement on the target occupancy.
    """
    src_prims = src.require_primitives()
    tgt_prims = tgt.require_primitives()
    if src_prims.category_id != tgt_prims.category_id:
        raise UserError("transport requires index-corresponding primitive sets "
                        f"({src_prims.category_id!r} vs {tgt_prims.category_id!r})")
    b_old = g_src.baseline
    contacts = np.stack([g_src.point, g_src.right_contact])
    labels = label_points(contacts, src_prims)
    j, jp = int(labels[0]), int(labels[1])
    ds = 0.5 * ((tgt_prims.centers[j] - src_prims.centers[j])
                + (tgt_prims.centers[jp] - src_prims.centers[jp]))

    limit = PROJECTION_LIMIT_VOXELS * tgt.occupancy.min_voxel
    projected = []
    for c in contacts + ds[None, :]:
        t, found = line_iso_crossing(tgt.occupancy, c, b_old, lo=-limit,
                                     hi=limit, iso=iso)
        if not found:
            return None
        projected.append(c + t * b_old)
    c1, c2 = projected

    n1 = surface_normals(tgt.occupancy, c1)
    n2 = surface_normals(tgt.occupancy, c2)
    b_new = n1 - n2
    norm = np.linalg.norm(b_new)
    if norm < 1e-9:
        b_new = b_old
    else:
        b_new = b_new / norm
        if b_new @ b_old < 0:
            b_new = -b_new

    rot = minimal_rotation_between(b_old, b_new)
    a_new = rot @ g_src.approach
    t_new = rot @ g_src.tangential
    b_rot = np.cross(t_new, a_new)  # exact frame closure

    w_coarse = float(np.clip(np.linalg.norm(c2 - c1), 0.0, w_max))
    if refine:
        w, _ = refine_width(tgt.occupancy, c1, b_rot, w_coarse, w_max, iso=iso)
    else:
        w = w_coarse
    conf = shape_confidence(tgt.occupancy, np.stack([c1, c1 + w * b_rot]))
    return Grasp(c1, g_src.validity, a_new, t_new, b_rot, w,
                 confidence=float(conf.min()))
