"""Sphere-primitive shape abstraction with cross-instance index correspondence.

A category template is fitted once on a canonical instance; every other
instance is fitted warm-started from the template with a small learning rate,
which keeps primitive indices semantically aligned across instances.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace

import numpy as np

from ..errors import UserError

log = logging.getLogger(__name__)

_RADIUS_FLOOR = 1e-4


@dataclass(frozen=True, eq=False)
class SpherePrimitiveSet:
    centers: np.ndarray        # (N_S, 3)
    radii: np.ndarray          # (N_S,) > 0
    category_id: str
    template: bool = False
    converged: bool = True
    final_loss: float = 0.0
    # centroid/RMS of the fitting samples; lets instance fits pre-align
    fit_centroid: np.ndarray | None = None
    fit_rms: float | None = None

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=np.float64).reshape(-1, 3)
        r = np.asarray(self.radii, dtype=np.float64).reshape(-1)
        if len(c) != len(r):
            raise UserError("centers and radii must have matching length")
        if len(c) == 0 or not np.all(np.isfinite(c)) or not np.all(r > 0):
            raise UserError("primitive centers must be finite and radii positive")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "radii", r)

    def __len__(self) -> int:
        return len(self.radii)

    def translated(self, offset) -> "SpherePrimitiveSet":
        off = np.asarray(offset, dtype=np.float64)
        centroid = None if self.fit_centroid is None else self.fit_centroid + off
        return replace(self, centers=self.centers + off[None, :],
                       fit_centroid=centroid)

    def to_dict(self) -> dict:
        d = {
            "category_id": self.category_id,
            "n_primitives": len(self),
            "centers": [list(map(float, c)) for c in self.centers],
            "radii": [float(r) for r in self.radii],
            "template": self.template,
        }
        if self.fit_centroid is not None:
            d["fit_centroid"] = list(map(float, self.fit_centroid))
            d["fit_rms"] = float(self.fit_rms)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SpherePrimitiveSet":
        try:
            centroid = d.get("fit_centroid")
            return cls(np.asarray(d["centers"], dtype=np.float64),
                       np.asarray(d["radii"], dtype=np.float64),
                       d["category_id"], bool(d.get("template", False)),
                       fit_centroid=None if centroid is None else np.asarray(centroid),
                       fit_rms=d.get("fit_rms"))
        except KeyError as exc:
            raise UserError(f"primitive set missing key {exc}") from exc


def save_primitives(prims: SpherePrimitiveSet, path) -> None:
    with open(path, "w") as fh:
        json.dump(prims.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_primitives(path) -> SpherePrimitiveSet:
    with open(path) as fh:
        return SpherePrimitiveSet.from_dict(json.load(fh))


@dataclass(frozen=True)
class PrimitiveFitConfig:
    steps: int = 2000
    learning_rate: float = 0.01
    lambda_cov: float = 0.1
    seed: int = 0
    # instance fits warm-start from the template: lr/10, capped step count
    instance_steps: int = 200
    stall_window: int = 100


def surface_residuals(points: np.ndarray, centers: np.ndarray,
                      radii: np.ndarray) -> np.ndarray:
    """| ||x - c_j|| - r_j | for every point/primitive pair, shape (N, N_S)."""
    d = np.linalg.norm(points[:, None, :] - centers[None, :, :], axis=2)
    return np.abs(d - radii[None, :])


def _loss_and_grads(points, centers, log_radii, lambda_cov):
    radii = np.exp(log_radii) + _RADIUS_FLOOR
    diff = points[:, None, :] - centers[None, :, :]          # (N, S, 3)
    dist = np.maximum(np.linalg.norm(diff, axis=2), 1e-12)   # (N, S)
    res = dist - radii[None, :]
    absres = np.abs(res)

    n, s = absres.shape
    j_star = absres.argmin(axis=1)                 # nearest primitive per point
    i_star = absres.argmin(axis=0)                 # nearest point per primitive
    fit = absres[np.arange(n), j_star].mean()
    cov = absres[i_star, np.arange(s)].mean()
    loss = fit + lambda_cov * cov

    g_c = np.zeros_like(centers)
    g_lr = np.zeros_like(log_radii)
    # d|dist - r|/dc = -sign(res) * (x - c)/dist ;  d/dlog_r = -sign(res) * r
    sgn_fit = np.sign(res[np.arange(n), j_star]) / n
    unit_fit = diff[np.arange(n), j_star] / dist[np.arange(n), j_star][:, None]
    np.add.at(g_c, j_star, -sgn_fit[:, None] * unit_fit)
    np.add.at(g_lr, j_star, -sgn_fit * radii[j_star])

    sgn_cov = np.sign(res[i_star, np.arange(s)]) * (lambda_cov / s)
    unit_cov = diff[i_star, np.arange(s)] / dist[i_star, np.arange(s)][:, None]
    g_c += -sgn_cov[:, None] * unit_cov
    g_lr += -sgn_cov * radii
    return loss, g_c, g_lr


def _farthest_point_init(points: np.ndarray, n: int, rng) -> np.ndarray:
    start = int(rng.integers(len(points)))
    chosen = [start]
    d2 = ((points - points[start]) ** 2).sum(axis=1)
    for _ in range(n - 1):
        nxt = int(d2.argmax())
        chosen.append(nxt)
        d2 = np.minimum(d2, ((points - points[nxt]) ** 2).sum(axis=1))
    return points[chosen].copy()


def _adam_fit(points, centers, radii, steps, lr, lambda_cov, stall_window,
              lr_decay=True):
    log_r = np.log(np.maximum(radii - _RADIUS_FLOOR, _RADIUS_FLOOR))
    m_c = np.zeros_like(centers); v_c = np.zeros_like(centers)
    m_r = np.zeros_like(log_r); v_r = np.zeros_like(log_r)
    b1, b2, eps = 0.9, 0.999, 1e-8
    best = np.inf
    best_params = (centers.copy(), log_r.copy())
    since_improve = 0
    loss = np.inf
    for t in range(1, steps + 1):
        loss, g_c, g_r = _loss_and_grads(points, centers, log_r, lambda_cov)
        if loss < best - 1e-12:
            best = loss
            best_params = (centers.copy(), log_r.copy())
            since_improve = 0
        else:
            since_improve += 1
        # cosine decay to zero tightens the Adam jitter floor near convergence
        lr_t = lr * 0.5 * (1.0 + np.cos(np.pi * (t - 1) / steps)) if lr_decay else lr
        m_c = b1 * m_c + (1 - b1) * g_c
        v_c = b2 * v_c + (1 - b2) * g_c * g_c
        m_r = b1 * m_r + (1 - b1) * g_r
        v_r = b2 * v_r + (1 - b2) * g_r * g_r
        corr1 = 1 - b1 ** t
        corr2 = 1 - b2 ** t
        centers = centers - lr_t * (m_c / corr1) / (np.sqrt(v_c / corr2) + eps)
        log_r = log_r - lr_t * (m_r / corr1) / (np.sqrt(v_r / corr2) + eps)
    converged = since_improve < stall_window
    centers, log_r = best_params
    return centers, np.exp(log_r) + _RADIUS_FLOOR, float(best), converged


def fit_template(samples, n_primitives: int,
                 config: PrimitiveFitConfig = PrimitiveFitConfig()
                 ) -> SpherePrimitiveSet:
    """Fit an index-defining template set to surface samples.

    Minimizes the symmetric sphere-surface loss (point-to-nearest-primitive
    plus lambda_cov * primitive-to-nearest-point) with Adam; centers start at
    farthest-point samples, radii at 0.05.
    """
    points = np.asarray(samples.points if hasattr(samples, "points") else samples,
                        dtype=np.float64)
    if len(points) < 10 * n_primitives:
        raise UserError(f"need >= {10 * n_primitives} samples to fit "
                        f"{n_primitives} primitives, got {len(points)}")
    rng = np.random.default_rng(config.seed)
    centers = _farthest_point_init(points, n_primitives, rng)
    radii = np.full(n_primitives, 0.05)
    centers, radii, loss, converged = _adam_fit(
        points, centers, radii, config.steps, config.learning_rate,
        config.lambda_cov, config.stall_window)
    if not converged:
        log.warning("template fit still improving at the step limit (loss %.3g)", loss)
    centroid = points.mean(axis=0)
    rms = float(np.sqrt(((points - centroid) ** 2).sum(axis=1).mean()))
    return SpherePrimitiveSet(centers, radii, category_id="", template=True,
                              converged=converged, final_loss=loss,
                              fit_centroid=centroid, fit_rms=rms)


def fit_instance(samples, template: SpherePrimitiveSet,
                 config: PrimitiveFitConfig = PrimitiveFitConfig()
                 ) -> SpherePrimitiveSet:
    """Warm-started instance fit; output index i corresponds to template index i.

    When the template carries its fitting-sample statistics, the warm start is
    first pre-aligned by the correspondence-free similarity (centroid shift +
    RMS-radius scale) between the two clouds; without it, instance offsets
    beyond the inter-primitive spacing scramble index correspondence.
    """
    points = np.asarray(samples.points if hasattr(samples, "points") else samples,
                        dtype=np.float64)
    centers = template.centers.copy()
    radii = template.radii.copy()
    centroid = points.mean(axis=0)
    rms = float(np.sqrt(((points - centroid) ** 2).sum(axis=1).mean()))
    if template.fit_centroid is not None and template.fit_rms:
        scale = rms / template.fit_rms
        centers = centroid[None, :] + scale * (centers - template.fit_centroid[None, :])
        radii = radii * scale
    steps = min(config.instance_steps, 200)
    # constant lr: warm-started fits need their full movement budget
    centers, radii, loss, converged = _adam_fit(
        points, centers, radii, steps,
        config.learning_rate * 0.1, config.lambda_cov, config.stall_window,
        lr_decay=False)
    return SpherePrimitiveSet(centers, radii, category_id=template.category_id,
                              template=False, converged=converged, final_loss=loss,
                              fit_centroid=centroid, fit_rms=rms)


@dataclass(frozen=True, eq=False)
class LabeledPoint:
    point: np.ndarray
    label: int


def label_points(points: np.ndarray, prims: SpherePrimitiveSet,
                 metric: str = "surface") -> np.ndarray:
    """Nearest-primitive label per point, ties broken by lowest index.

    ``metric='surface'`` uses | ||x-c|| - r | (default); ``'center'`` uses
    plain center distance.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if len(pts) == 0:
        raise UserError("label_points requires at least one point")
    if metric == "surface":
        d = surface_residuals(pts, prims.centers, prims.radii)
    elif metric == "center":
        d = np.linalg.norm(pts[:, None, :] - prims.centers[None, :, :], axis=2)
    else:
        raise UserError(f"unknown labeling metric {metric!r}")
    return d.argmin(axis=1)
