"""End-to-end field transfer: approximate, transport, filter, refit, decode."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

from ..errors import UserError
from ..geomcore.sampling import sample_surface
from ..graspkit.gripper import GripperModel
from ..graspkit.oracle import check_grasp
from ..graspkit.ranking import rank_and_select
from ..neuralfield.fitting import FitConfig, fit
from ..neuralfield.losses import FitDataset, build_labels
from ..neuralfield.model import NsgfModel
from ..neuralfield.pose import Grasp, GraspLabel
from .approx import approximate_field, decode_raw
from .records import ObjectRecord
from .transport import transport_grasp

log = logging.getLogger(__name__)

MIN_SURVIVORS = 5


@dataclass(frozen=True)
class TransferStats:
    n_approx: int
    n_transported: int
    n_rejected_projection: int
    n_filtered_out: int
    n_survivors: int
    refit_final_loss: float

    def to_dict(self) -> dict:
        return {"n_approx": self.n_approx, "n_transported": self.n_transported,
                "n_rejected_projection": self.n_rejected_projection,
                "n_filtered_out": self.n_filtered_out,
                "n_survivors": self.n_survivors,
                "refit_final_loss": self.refit_final_loss}

    def save(self, path, extra: dict | None = None) -> None:
        doc = {"format": "nsgf-transfer-stats", "version": 1}
        doc.update(self.to_dict())
        doc.update(extra or {})
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
            fh.write("\n")


def _refit_dataset(tgt: ObjectRecord, survivors: list[Grasp], rho: float,
                   n_samples: int, seed: int) -> FitDataset:
    """Positives within rho of surviving contacts; negatives sampled 4x from
    surface points farther than 2*rho from any positive contact."""
    labels = [GraspLabel(g.point, g.right_contact, g.approach, g.tangential, True)
              for g in survivors]
    samples = sample_surface(tgt.mesh, tgt.occupancy, n_samples, seed=seed)
    ds = build_labels(samples, labels, rho)
    pos_idx = np.nonzero(ds.is_positive)[0]
    anchors = np.stack([lab.point for lab in labels])
    dmin = np.linalg.norm(ds.points[:, None, :] - anchors[None, :, :], axis=2).min(axis=1)
    far_neg = np.nonzero(~ds.is_positive & (dmin > 2.0 * rho))[0]
    rng = np.random.default_rng(seed + 1)
    n_neg = min(len(far_neg), 4 * len(pos_idx))
    neg_idx = rng.choice(far_neg, size=n_neg, replace=False) if n_neg else far_neg[:0]
    keep = np.concatenate([pos_idx, np.sort(neg_idx)])
    return ds.subset(np.sort(keep))


def transfer_field(src: ObjectRecord, tgt: ObjectRecord, gripper: GripperModel,
                   mu: float, refit: FitConfig, approx_samples: int = 5000,
                   label_samples: int = 20000, rho: float = 0.015,
                   iso: float = 0.5, seed: int = 0,
                   skip_filter: bool = False, cold_start: bool = False,
                   refine_widths: bool = True
                   ) -> tuple[NsgfModel, TransferStats]:
    """Derive the target object's field from a fitted source field.

    Ablation switches: ``skip_filter`` keeps unstable transported grasps
    (A3), ``cold_start`` refits from fresh weights instead of the source's
    (A2), ``refine_widths=False`` disables occupancy-guided widths during
    transport (A1).
    """
    if src.field is None:
        raise UserError(f"source object {src.name} has no fitted field")
    if tgt.field is not None:
        raise UserError(f"target object {tgt.name} already has a field")

    approx = approximate_field(src, samples=approx_samples, seed=seed, iso=iso)
    source_grasps = approx.all_grasps()

    transported: list[Grasp] = []
    n_rejected = 0
    for g in source_grasps:
        out = transport_grasp(g, src, tgt, w_max=gripper.max_width, iso=iso,
                              refine=refine_widths)
        if out is None:
            n_rejected += 1
        else:
            transported.append(out)

    if skip_filter:
        survivors = list(transported)
        n_filtered = 0
    else:
        survivors = [g for g in transported
                     if check_grasp(g, tgt.occupancy, gripper, mu, iso).passed]
        n_filtered = len(transported) - len(survivors)

    if len(survivors) < MIN_SURVIVORS:
        raise UserError(
            f"category transfer infeasible: only {len(survivors)} grasps survive "
            f"({len(source_grasps)} approximated, {n_rejected} projection-rejected, "
            f"{n_filtered} oracle-filtered)")

    dataset = _refit_dataset(tgt, survivors, rho, label_samples, seed=refit.seed)
    if cold_start:
        start = NsgfModel.create(src.field.grid_bbox_min, src.field.grid_bbox_max,
                                 w_max=src.field.w_max, seed=refit.seed,
                                 **src.field.arch)
    else:
        start = src.field
    fitted, trace = fit(start, dataset, refit)
    fitted.bind_field(tgt.occupancy)

    stats = TransferStats(
        n_approx=len(source_grasps), n_transported=len(transported),
        n_rejected_projection=n_rejected, n_filtered_out=n_filtered,
        n_survivors=len(survivors), refit_final_loss=float(trace[-1]))
    log.info("transfer %s -> %s: %s", src.name, tgt.name, stats.to_dict())
    return fitted, stats


def decode_grasps(model: NsgfModel, tgt: ObjectRecord, n_points: int = 5000,
                  seed: int = 0, iso: float = 0.5, refine: bool = True,
                  confidence_combine: str = "min") -> list[Grasp]:
    """Inference: sample the surface, query, keep valid, refine, rank."""
    record = tgt if tgt.field is model else tgt.with_field(model)
    grasps = decode_raw(record, n_points, seed=seed, refine=refine, iso=iso)
    return rank_and_select(grasps, tgt.occupancy, combine=confidence_combine)
