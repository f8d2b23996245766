"""Experiment configuration: one JSON document drives every pipeline stage."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace

from .errors import UserError
from .geomcore.shapes import ShapeSpec
from .graspkit.gripper import GripperModel
from .neuralfield.fitting import FitConfig
from .primitives.spheres import PrimitiveFitConfig


@dataclass(frozen=True)
class ExperimentConfig:
    source: ShapeSpec
    targets: tuple[ShapeSpec, ...]
    category_id: str = "category"
    seed: int = 0
    out_dir: str = "runs/default"
    grid_dims: int = 64
    n_primitives: int = 64
    mu: float = 0.5
    iso: float = 0.5                  # surface occupancy threshold
    label_radius: float = 0.04
    annotation_budget: int = 200
    annotation_candidates: int | None = None
    surface_samples: int = 8000       # labeled pool for field fitting
    primitive_samples: int = 3000
    decode_points: int = 5000
    approx_samples: int = 5000
    mean_shift_bandwidth: float | None = None  # default: 2 voxel edges
    gripper: GripperModel = field(default_factory=GripperModel)
    fit: FitConfig = field(default_factory=FitConfig)
    refit: FitConfig = field(default_factory=lambda: FitConfig(iterations=40))
    primitive_fit: PrimitiveFitConfig = field(default_factory=PrimitiveFitConfig)

    def __post_init__(self):
        if self.grid_dims < 16:
            raise UserError(f"grid_dims must be >= 16, got {self.grid_dims}")
        if not (0.0 < self.iso < 1.0):
            raise UserError(f"iso must lie in (0, 1), got {self.iso}")
        if self.mu <= 0:
            raise UserError(f"mu must be positive, got {self.mu}")
        if not self.targets:
            raise UserError("config needs at least one target shape")

    def resolved_bandwidth(self, field_obj) -> float:
        if self.mean_shift_bandwidth is not None:
            return self.mean_shift_bandwidth
        return 2.0 * field_obj.min_voxel

    def to_dict(self) -> dict:
        return {
            "category_id": self.category_id,
            "seed": self.seed,
            "out_dir": self.out_dir,
            "grid_dims": self.grid_dims,
            "n_primitives": self.n_primitives,
            "mu": self.mu,
            "iso": self.iso,
            "label_radius": self.label_radius,
            "annotation_budget": self.annotation_budget,
            "annotation_candidates": self.annotation_candidates,
            "surface_samples": self.surface_samples,
            "primitive_samples": self.primitive_samples,
            "decode_points": self.decode_points,
            "approx_samples": self.approx_samples,
            "mean_shift_bandwidth": self.mean_shift_bandwidth,
            "gripper": self.gripper.to_dict(),
            "source": self.source.to_dict(),
            "targets": [t.to_dict() for t in self.targets],
            "fit": self.fit.to_dict(),
            "refit": self.refit.to_dict(),
            "primitive_fit": {
                "steps": self.primitive_fit.steps,
                "learning_rate": self.primitive_fit.learning_rate,
                "lambda_cov": self.primitive_fit.lambda_cov,
                "seed": self.primitive_fit.seed,
                "instance_steps": self.primitive_fit.instance_steps,
            },
        }

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        try:
            source = ShapeSpec.from_dict(d["source"])
            targets = tuple(ShapeSpec.from_dict(t) for t in d["targets"])
        except (KeyError, TypeError) as exc:
            raise UserError(f"config: invalid or missing shape specs ({exc})") from exc
        seed = int(d.get("seed", 0))
        # derived per-stage seeds; explicit sub-config seeds win
        fit_d = dict(d.get("fit", {}))
        fit_d.setdefault("seed", seed + 2)
        refit_d = dict(d.get("refit", {}))
        refit_d.setdefault("iterations", 40)
        refit_d.setdefault("seed", seed + 4)
        prim_d = dict(d.get("primitive_fit", {}))
        prim_d.setdefault("seed", seed + 3)
        known = {"steps", "learning_rate", "lambda_cov", "seed", "instance_steps"}
        prim_cfg = PrimitiveFitConfig(**{k: v for k, v in prim_d.items() if k in known})
        return cls(
            source=source,
            targets=targets,
            category_id=str(d.get("category_id", "category")),
            seed=seed,
            out_dir=str(d.get("out_dir", "runs/default")),
            grid_dims=int(d.get("grid_dims", 64)),
            n_primitives=int(d.get("n_primitives", 64)),
            mu=float(d.get("mu", 0.5)),
            iso=float(d.get("iso", 0.5)),
            label_radius=float(d.get("label_radius", 0.03)),
            annotation_budget=int(d.get("annotation_budget", 200)),
            annotation_candidates=d.get("annotation_candidates"),
            surface_samples=int(d.get("surface_samples", 8000)),
            primitive_samples=int(d.get("primitive_samples", 3000)),
            decode_points=int(d.get("decode_points", 5000)),
            approx_samples=int(d.get("approx_samples", 5000)),
            mean_shift_bandwidth=d.get("mean_shift_bandwidth"),
            gripper=GripperModel.from_dict(d.get("gripper", {})),
            fit=FitConfig.from_dict(fit_d),
            refit=FitConfig.from_dict(refit_d),
            primitive_fit=prim_cfg,
        )

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except FileNotFoundError as exc:
            raise UserError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise UserError(f"config file {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(doc)

    def with_overrides(self, out_dir: str | None = None,
                       seed: int | None = None) -> "ExperimentConfig":
        cfg = self
        if out_dir is not None:
            cfg = replace(cfg, out_dir=out_dir)
        if seed is not None:
            cfg = replace(cfg,
                          seed=seed,
                          fit=replace(cfg.fit, seed=seed + 2),
                          refit=replace(cfg.refit, seed=seed + 4),
                          primitive_fit=replace(cfg.primitive_fit, seed=seed + 3))
        return cfg
