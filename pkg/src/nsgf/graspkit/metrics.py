"""Grasp-set evaluation: per-category omni-grasp and best-grasp success rates."""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass

import numpy as np

from ..geomcore.field import OccupancyField
from ..neuralfield.pose import Grasp
from .gripper import GripperModel
from .oracle import check_grasp

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ObjectEval:
    name: str
    n_all: int
    n_succ: int
    best_passed: bool

    @property
    def ratio(self) -> float:
        return self.n_succ / self.n_all if self.n_all else 0.0


@dataclass(frozen=True)
class EvalReport:
    per_object: tuple[ObjectEval, ...]
    s_omni: float
    s_best: float

    @property
    def n_cat(self) -> int:
        return len(self.per_object)

    def to_dict(self) -> dict:
        return {
            "n_cat": self.n_cat,
            "s_omni": self.s_omni,
            "s_best": self.s_best,
            "per_object": [
                {"name": o.name, "n_all": o.n_all, "n_succ": o.n_succ,
                 "ratio": o.ratio, "best_passed": o.best_passed}
                for o in self.per_object
            ],
        }


def evaluate(objects: list[tuple[str, list[Grasp], OccupancyField]],
             gripper: GripperModel, mu: float = 0.5, iso: float = 0.5
             ) -> EvalReport:
    """Score ranked grasp sets against ground-truth occupancy.

    Success is an oracle pass on the object's ground-truth field (never the
    pipeline's own fitted field). s_omni is the mean over objects of the
    per-object success ratio; s_best counts objects whose top-ranked grasp
    passes. Objects with zero valid grasps score 0 and are flagged.
    """
    per = []
    for name, grasps, gt_field in objects:
        if not grasps:
            log.warning("object %s has no valid grasps; counted as zero success", name)
            per.append(ObjectEval(name, 0, 0, False))
            continue
        verdicts = [check_grasp(g, gt_field, gripper, mu, iso) for g in grasps]
        n_succ = sum(v.passed for v in verdicts)
        per.append(ObjectEval(name, len(grasps), n_succ, verdicts[0].passed))
    s_omni = float(np.mean([o.ratio for o in per])) if per else 0.0
    s_best = float(np.mean([1.0 if o.best_passed else 0.0 for o in per])) if per else 0.0
    return EvalReport(tuple(per), s_omni, s_best)


def save_report_json(report: EvalReport, path, extra: dict | None = None) -> None:
    doc = {"format": "nsgf-eval-report", "version": 1}
    doc.update(report.to_dict())
    doc.update(extra or {})
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def save_report_csv(report: EvalReport, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["object", "n_all", "n_succ", "ratio", "best_passed"])
        for o in report.per_object:
            writer.writerow([o.name, o.n_all, o.n_succ, f"{o.ratio:.6f}",
                             int(o.best_passed)])
        writer.writerow(["s_omni", "", "", f"{report.s_omni:.6f}", ""])
        writer.writerow(["s_best", "", "", f"{report.s_best:.6f}", ""])
