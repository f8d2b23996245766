"""Field fitting (Adam over the full parameter set) and gradient verification."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import FittingError, UserError
from . import autodiff as ad
from .losses import FitDataset, fitting_loss_tape
from .model import NsgfModel


@dataclass(frozen=True)
class FitConfig:
    iterations: int = 200
    points_per_iter: int = 2000
    learning_rate: float = 0.0001
    lambda_reg: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise UserError(f"iterations must be >= 1, got {self.iterations}")
        if self.lambda_reg < 0:
            raise UserError(f"lambda_reg must be >= 0, got {self.lambda_reg}")

    def to_dict(self) -> dict:
        return {"iterations": self.iterations, "points_per_iter": self.points_per_iter,
                "learning_rate": self.learning_rate, "lambda_reg": self.lambda_reg,
                "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps,
                "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "FitConfig":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})

    def scaled_iterations(self, factor: float) -> "FitConfig":
        return replace(self, iterations=max(1, int(round(self.iterations * factor))))


def fit(model: NsgfModel, dataset: FitDataset, config: FitConfig
        ) -> tuple[NsgfModel, list[float]]:
    """Optimize a copy of ``model`` on the labeled dataset.

    Batches of ``points_per_iter`` are drawn per iteration (with replacement
    only when the pool is smaller); passing a pre-fitted model warm-starts
    the run. Returns the fitted snapshot and the per-iteration loss trace.
    """
    if len(dataset) == 0:
        raise UserError("fit needs a non-empty dataset")
    work = model.copy()
    params = work.param_list()
    opt = ad.Adam(params, lr=config.learning_rate, beta1=config.beta1,
                  beta2=config.beta2, eps=config.eps)
    rng = np.random.default_rng(config.seed)
    n = len(dataset)
    bs = config.points_per_iter
    trace: list[float] = []
    for it in range(config.iterations):
        idx = rng.choice(n, size=bs, replace=n < bs)
        batch = dataset.subset(idx)
        loss, _ = fitting_loss_tape(work, batch, config.lambda_reg)
        if not np.isfinite(loss.value):
            raise FittingError(f"non-finite loss at iteration {it}")
        opt.zero_grad()
        ad.backward(loss)
        opt.step()
        trace.append(float(loss.value))
    work.config_echo = config.to_dict()
    return work, trace


def smoothed_trace(trace: list[float], window: int = 20) -> np.ndarray:
    """Moving average over the trailing window, same length as the trace."""
    arr = np.asarray(trace, dtype=np.float64)
    out = np.empty_like(arr)
    for i in range(len(arr)):
        out[i] = arr[max(0, i - window + 1):i + 1].mean()
    return out


def grad_check(model: NsgfModel, batch: FitDataset, lam: float,
               h: float = 1e-5) -> float:
    """Max error of analytic parameter gradients vs central finite differences.

    The error is normalized by the largest finite-difference gradient
    magnitude, which keeps near-zero entries from inflating the ratio.
    Intended for small models (hidden <= 16, batch <= 8).
    """
    loss, _ = fitting_loss_tape(model, batch, lam)
    for p in model.param_list():
        p.grad = None
    ad.backward(loss)

    def eval_loss() -> float:
        t, _ = fitting_loss_tape(model, batch, lam)
        return float(t.value)

    worst_abs = 0.0
    largest_fd = 0.0
    for p in model.param_list():
        analytic = p.grad if p.grad is not None else np.zeros_like(p.value)
        flat = p.value.reshape(-1)
        a_flat = analytic.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = eval_loss()
            flat[i] = orig - h
            down = eval_loss()
            flat[i] = orig
            fd = (up - down) / (2.0 * h)
            worst_abs = max(worst_abs, abs(a_flat[i] - fd))
            largest_fd = max(largest_fd, abs(fd))
    return worst_abs / max(largest_fd, 1e-10)
