"""The grasp-field model: sinusoidal MLP heads over a trainable feature grid.

The backbone consumes a 3-D point concatenated with a 16-D feature
trilinearly interpolated from a jointly-trained grid and emits a 128-D
feature; three sinusoidal heads decode a 6-D rotation, a coarse width logit,
and a validity logit. All parameters are float64 and optimized by the
reverse-mode engine in ``autodiff``.
"""
from __future__ import annotations

import base64
import json
from dataclasses import dataclass

import numpy as np

from ..errors import UserError
from . import autodiff as ad
from .autodiff import Tensor


@dataclass(frozen=True, eq=False)
class QueryResult:
    """Raw per-point field outputs (arrays aligned with the query batch)."""

    validity: np.ndarray     # (N,) logits
    approach: np.ndarray     # (N, 3) unit
    tangential: np.ndarray   # (N, 3) unit
    baseline: np.ndarray     # (N, 3) unit, tangential x approach
    width: np.ndarray        # (N,) coarse widths in (0, w_max)

    def __len__(self):
        return len(self.validity)


class NsgfModel:
    """Weights + architecture of one object's grasp field."""

    def __init__(self, arch: dict, w_max: float, grid_bbox_min, grid_bbox_max,
                 params: dict[str, Tensor], config_echo: dict | None = None):
        self.arch = dict(arch)
        self.w_max = float(w_max)
        self.grid_bbox_min = np.asarray(grid_bbox_min, dtype=np.float64).reshape(3)
        self.grid_bbox_max = np.asarray(grid_bbox_max, dtype=np.float64).reshape(3)
        self.params = params
        self.config_echo = dict(config_echo or {})
        self.bound_field = None  # OccupancyField for width refinement, runtime only

    # --- construction ---

    @classmethod
    def create(cls, grid_bbox_min, grid_bbox_max, w_max: float, seed: int = 0,
               hidden: int = 128, backbone_layers: int = 8, head_layers: int = 4,
               feature_dim: int = 16, grid_res: int = 16,
               omega0: float = 30.0) -> "NsgfModel":
        arch = {"hidden": hidden, "backbone_layers": backbone_layers,
                "head_layers": head_layers, "feature_dim": feature_dim,
                "grid_res": grid_res, "omega0": omega0}
        rng = np.random.default_rng(seed)
        params: dict[str, Tensor] = {}
        params["feature_grid"] = ad.param(
            rng.normal(0.0, 0.01, size=(grid_res ** 3, feature_dim)))

        def sine_layer(name, fan_in, fan_out, first=False):
            if first:
                w = rng.uniform(-1.0 / fan_in, 1.0 / fan_in, size=(fan_in, fan_out))
            else:
                bound = np.sqrt(6.0 / fan_in) / omega0
                w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
            b = rng.uniform(-1.0 / np.sqrt(fan_in), 1.0 / np.sqrt(fan_in), size=fan_out)
            params[name + ".W"] = ad.param(w)
            params[name + ".b"] = ad.param(b)

        def linear_layer(name, fan_in, fan_out):
            bound = np.sqrt(6.0 / fan_in) / omega0
            params[name + ".W"] = ad.param(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            params[name + ".b"] = ad.param(
                rng.uniform(-1.0 / np.sqrt(fan_in), 1.0 / np.sqrt(fan_in), size=fan_out))

        fan = 3 + feature_dim
        for i in range(backbone_layers):
            sine_layer(f"backbone.{i}", fan, hidden, first=(i == 0))
            fan = hidden
        for head, out_dim in (("rot", 6), ("width", 1), ("validity", 1)):
            for i in range(head_layers - 1):
                sine_layer(f"{head}.{i}", hidden, hidden)
            linear_layer(f"{head}.{head_layers - 1}", hidden, out_dim)
        return cls(arch, w_max, grid_bbox_min, grid_bbox_max, params)

    def param_names(self) -> list[str]:
        names = ["feature_grid"]
        for i in range(self.arch["backbone_layers"]):
            names += [f"backbone.{i}.W", f"backbone.{i}.b"]
        for head in ("rot", "width", "validity"):
            for i in range(self.arch["head_layers"]):
                names += [f"{head}.{i}.W", f"{head}.{i}.b"]
        return names

    def param_list(self) -> list[Tensor]:
        return [self.params[n] for n in self.param_names()]

    def n_params(self) -> int:
        return sum(p.value.size for p in self.param_list())

    def copy(self) -> "NsgfModel":
        params = {k: ad.param(v.value.copy()) for k, v in self.params.items()}
        m = NsgfModel(self.arch, self.w_max, self.grid_bbox_min, self.grid_bbox_max,
                      params, self.config_echo)
        m.bound_field = self.bound_field
        return m

    def bind_field(self, field) -> None:
        self.bound_field = field

    # --- forward ---

    def _grid_corners(self, pts: np.ndarray):
        g = self.arch["grid_res"]
        span = self.grid_bbox_max - self.grid_bbox_min
        rel = (pts - self.grid_bbox_min[None, :]) / span[None, :] * (g - 1)
        rel = np.clip(rel, 0.0, g - 1.0)
        cell = np.minimum(np.floor(rel).astype(np.intp), g - 2)
        f = rel - cell
        idx = np.empty((len(pts), 8), dtype=np.intp)
        w = np.empty((len(pts), 8))
        corner = 0
        for dx in (0, 1):
            wx = f[:, 0] if dx else 1.0 - f[:, 0]
            for dy in (0, 1):
                wy = f[:, 1] if dy else 1.0 - f[:, 1]
                for dz in (0, 1):
                    wz = f[:, 2] if dz else 1.0 - f[:, 2]
                    idx[:, corner] = ((cell[:, 0] + dx) * g + (cell[:, 1] + dy)) * g \
                        + (cell[:, 2] + dz)
                    w[:, corner] = wx * wy * wz
                    corner += 1
        return idx, w

    def _mlp(self, h: Tensor, prefix: str, n_layers: int, final_linear: bool) -> Tensor:
        omega = self.arch["omega0"]
        for i in range(n_layers):
            W = self.params[f"{prefix}.{i}.W"]
            b = self.params[f"{prefix}.{i}.b"]
            z = ad.add(ad.matmul(h, W), b)
            if final_linear and i == n_layers - 1:
                h = z
            else:
                h = ad.sin(ad.mul(z, omega))
        return h

    def forward_tape(self, points: np.ndarray) -> dict[str, Tensor]:
        """Build the differentiable forward pass for a (N, 3) point batch."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        idx, w = self._grid_corners(pts)
        feat = ad.grid_trilinear(self.params["feature_grid"], idx, w)
        x = ad.concat_cols([ad.const(pts), feat])
        h = self._mlp(x, "backbone", self.arch["backbone_layers"], final_linear=False)

        six = self._mlp(h, "rot", self.arch["head_layers"], final_linear=True)
        width_logit = self._mlp(h, "width", self.arch["head_layers"], final_linear=True)
        q = self._mlp(h, "validity", self.arch["head_layers"], final_linear=True)

        a = ad.normalize_rows(ad.cols(six, 0, 3))
        t_raw = ad.cols(six, 3, 6)
        proj = ad.tsum(ad.mul(t_raw, a), axis=1, keepdims=True)
        t = ad.normalize_rows(ad.sub(t_raw, ad.mul(a, proj)))
        b = ad.cross_rows(t, a)
        w_coarse = ad.mul(ad.sigmoid(width_logit), self.w_max)
        return {"q": q, "approach": a, "tangential": t, "baseline": b,
                "w_coarse": w_coarse, "six": six}

    def query(self, points: np.ndarray) -> QueryResult:
        """Batch field evaluation; order-preserving, no gradients."""
        out = self.forward_tape(points)
        return QueryResult(out["q"].value[:, 0].copy(),
                           out["approach"].value.copy(),
                           out["tangential"].value.copy(),
                           out["baseline"].value.copy(),
                           out["w_coarse"].value[:, 0].copy())

    # --- persistence ---

    def save(self, path) -> None:
        names = self.param_names()
        blob = b"".join(self.params[n].value.astype("<f8").tobytes() for n in names)
        doc = {
            "format": "nsgf-model",
            "version": 1,
            "arch": self.arch,
            "w_max": self.w_max,
            "grid_bbox_min": list(map(float, self.grid_bbox_min)),
            "grid_bbox_max": list(map(float, self.grid_bbox_max)),
            "param_order": names,
            "param_shapes": {n: list(self.params[n].value.shape) for n in names},
            "config_echo": self.config_echo,
            "params_b64": base64.b64encode(blob).decode("ascii"),
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "NsgfModel":
        with open(path) as fh:
            doc = json.load(fh)
        if doc.get("format") != "nsgf-model":
            raise UserError(f"{path}: not a model file")
        if doc.get("version") != 1:
            raise UserError(f"{path}: unsupported model version {doc.get('version')}")
        blob = base64.b64decode(doc["params_b64"])
        params: dict[str, Tensor] = {}
        at = 0
        for name in doc["param_order"]:
            shape = tuple(doc["param_shapes"][name])
            size = int(np.prod(shape)) * 8
            arr = np.frombuffer(blob[at:at + size], dtype="<f8").reshape(shape)
            params[name] = ad.param(arr.copy())
            at += size
        if at != len(blob):
            raise UserError(f"{path}: parameter blob size mismatch")
        return cls(doc["arch"], doc["w_max"], doc["grid_bbox_min"],
                   doc["grid_bbox_max"], params, doc.get("config_echo"))
