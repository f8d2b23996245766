"""Fitting dataset assembly and the four-term grasp-field loss."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import UserError
from . import autodiff as ad
from .autodiff import Tensor
from .model import NsgfModel
from .pose import GraspLabel


@dataclass(frozen=True, eq=False)
class FitDataset:
    """Per-point training targets; negative rows carry zeros for the grasp fields."""

    points: np.ndarray         # (N, 3)
    normals: np.ndarray        # (N, 3) surface normals
    is_positive: np.ndarray    # (N,) bool
    approach_gt: np.ndarray    # (N, 3)
    tangential_gt: np.ndarray  # (N, 3)
    antipodal_gt: np.ndarray   # (N, 3) ground-truth right contact

    def __len__(self) -> int:
        return len(self.points)

    @property
    def n_positive(self) -> int:
        return int(self.is_positive.sum())

    def subset(self, idx) -> "FitDataset":
        return FitDataset(self.points[idx], self.normals[idx],
                          self.is_positive[idx], self.approach_gt[idx],
                          self.tangential_gt[idx], self.antipodal_gt[idx])


def build_labels(samples, annotations: list[GraspLabel], rho: float) -> FitDataset:
    """Transfer annotated grasps onto surface samples.

    A sample within ``rho`` of an annotated left contact inherits that
    grasp's attributes (nearest annotation wins); all other samples are
    negatives.
    """
    pts = samples.points
    n = len(pts)
    is_pos = np.zeros(n, dtype=bool)
    a_gt = np.zeros((n, 3))
    t_gt = np.zeros((n, 3))
    p_gt = np.zeros((n, 3))
    positives = [lab for lab in annotations if lab.is_positive]
    if positives:
        anchors = np.stack([lab.point for lab in positives])
        d = np.linalg.norm(pts[:, None, :] - anchors[None, :, :], axis=2)
        nearest = d.argmin(axis=1)
        within = d[np.arange(n), nearest] <= rho
        for i in np.nonzero(within)[0]:
            lab = positives[nearest[i]]
            is_pos[i] = True
            a_gt[i] = lab.approach
            t_gt[i] = lab.tangential
            p_gt[i] = lab.antipodal_point
    return FitDataset(pts.copy(), samples.normals.copy(), is_pos, a_gt, t_gt, p_gt)


def fitting_loss_tape(model: NsgfModel, batch: FitDataset, lam: float
                      ) -> tuple[Tensor, dict]:
    """Differentiable total loss l_v + l_r + l_w + lam * l_reg.

    l_v is class-balanced BCE on validity logits over all points; the grasp
    terms run over positives only: cosine losses on approach/tangential,
    squared error of the implied right contact, and the sign-symmetric L1
    alignment of the baseline with the surface normal.
    """
    if len(batch) == 0:
        raise UserError("fitting loss needs a non-empty batch")
    out = model.forward_tape(batch.points)
    pos = batch.is_positive
    n_pos = int(pos.sum())
    n_neg = len(batch) - n_pos

    y = pos.astype(np.float64)
    pos_weight = (n_neg / n_pos) if (n_pos > 0 and n_neg > 0) else 1.0
    weights = np.where(pos, pos_weight, 1.0)
    l_v = ad.bce_with_logits_mean(ad.cols(out["q"], 0, 1), y[:, None], weights[:, None])

    flagged = n_pos == 0
    if flagged:
        zero = ad.const(0.0)
        l_r = l_w = l_reg = zero
    else:
        mask = (pos.astype(np.float64) / n_pos)[:, None]   # masked mean weights
        a, t, b = out["approach"], out["tangential"], out["baseline"]
        da = ad.tsum(ad.mul(a, batch.approach_gt), axis=1, keepdims=True)
        dt = ad.tsum(ad.mul(t, batch.tangential_gt), axis=1, keepdims=True)
        per_r = ad.add(ad.sub(1.0, da), ad.sub(1.0, dt))
        l_r = ad.tsum(ad.mul(per_r, mask))

        pred_right = ad.add(ad.const(batch.points), ad.mul(b, out["w_coarse"]))
        diff = ad.sub(pred_right, batch.antipodal_gt)
        per_w = ad.tsum(ad.mul(diff, diff), axis=1, keepdims=True)
        l_w = ad.tsum(ad.mul(per_w, mask))

        nrm = batch.normals
        nb = ad.tsum(ad.mul(ad.const(nrm), b), axis=1, keepdims=True)
        e_plus = ad.add(ad.tsum(ad.absolute(ad.sub(nrm, b)), axis=1, keepdims=True),
                        ad.absolute(ad.sub(1.0, nb)))
        e_minus = ad.add(ad.tsum(ad.absolute(ad.add(nrm, b)), axis=1, keepdims=True),
                         ad.absolute(ad.add(1.0, nb)))
        e = ad.where(e_plus.value <= e_minus.value, e_plus, e_minus)
        l_reg = ad.tsum(ad.mul(e, mask))

    total = ad.add(ad.add(l_v, l_r), ad.add(l_w, ad.mul(l_reg, lam)))
    breakdown = {
        "l_v": float(l_v.value), "l_r": float(l_r.value), "l_w": float(l_w.value),
        "l_reg": float(l_reg.value), "total": float(total.value),
        "n_pos": n_pos, "zero_positive_batch": flagged,
    }
    return total, breakdown


def fitting_loss(model: NsgfModel, batch: FitDataset, lam: float) -> tuple[float, dict]:
    total, breakdown = fitting_loss_tape(model, batch, lam)
    return float(total.value), breakdown
