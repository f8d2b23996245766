"""Minimal reverse-mode automatic differentiation on numpy arrays.

Just enough machinery for the grasp-field MLP and its losses: broadcasting
elementwise ops, matmul, sine, stable sigmoid/BCE primitives, row-wise cross
products, reductions, and a feature-grid gather with scatter-add backward.
Everything runs in float64; gradients are exact (verified against central
finite differences by ``grad_check``).
"""
from __future__ import annotations

import numpy as np


class Tensor:
    __slots__ = ("value", "grad", "parents", "bw", "requires_grad")

    def __init__(self, value, parents=(), bw=None, requires_grad=False):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self.parents = parents
        self.bw = bw
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)

    @property
    def shape(self):
        return self.value.shape

    # convenience operators (other may be a Tensor, array, or scalar)
    def __add__(self, other): return add(self, other)
    def __radd__(self, other): return add(other, self)
    def __sub__(self, other): return sub(self, other)
    def __rsub__(self, other): return sub(other, self)
    def __mul__(self, other): return mul(self, other)
    def __rmul__(self, other): return mul(other, self)
    def __truediv__(self, other): return div(self, other)
    def __neg__(self): return mul(self, -1.0)
    def __matmul__(self, other): return matmul(self, other)


def param(value) -> Tensor:
    return Tensor(np.array(value, dtype=np.float64), requires_grad=True)


def const(value) -> Tensor:
    return Tensor(value)


def _t(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` (reverses numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def add(a, b) -> Tensor:
    a, b = _t(a), _t(b)
    return Tensor(a.value + b.value, (a, b),
                  lambda g: (_unbroadcast(g, a.value.shape),
                             _unbroadcast(g, b.value.shape)))


def sub(a, b) -> Tensor:
    a, b = _t(a), _t(b)
    return Tensor(a.value - b.value, (a, b),
                  lambda g: (_unbroadcast(g, a.value.shape),
                             _unbroadcast(-g, b.value.shape)))


def mul(a, b) -> Tensor:
    a, b = _t(a), _t(b)
    return Tensor(a.value * b.value, (a, b),
                  lambda g: (_unbroadcast(g * b.value, a.value.shape),
                             _unbroadcast(g * a.value, b.value.shape)))


def div(a, b) -> Tensor:
    a, b = _t(a), _t(b)
    return Tensor(a.value / b.value, (a, b),
                  lambda g: (_unbroadcast(g / b.value, a.value.shape),
                             _unbroadcast(-g * a.value / (b.value * b.value),
                                          b.value.shape)))


def matmul(a, b) -> Tensor:
    a, b = _t(a), _t(b)
    return Tensor(a.value @ b.value, (a, b),
                  lambda g: (g @ b.value.T, a.value.T @ g))


def sin(x) -> Tensor:
    x = _t(x)
    return Tensor(np.sin(x.value), (x,), lambda g: (g * np.cos(x.value),))


def exp(x) -> Tensor:
    x = _t(x)
    out = np.exp(x.value)
    return Tensor(out, (x,), lambda g: (g * out,))


def sqrt(x) -> Tensor:
    x = _t(x)
    out = np.sqrt(x.value)
    return Tensor(out, (x,), lambda g: (g * 0.5 / out,))


def absolute(x) -> Tensor:
    x = _t(x)
    return Tensor(np.abs(x.value), (x,), lambda g: (g * np.sign(x.value),))


def sigmoid(x) -> Tensor:
    x = _t(x)
    v = x.value
    out = np.where(v >= 0, 1.0 / (1.0 + np.exp(-np.abs(v))),
                   np.exp(-np.abs(v)) / (1.0 + np.exp(-np.abs(v))))
    return Tensor(out, (x,), lambda g: (g * out * (1.0 - out),))


def tsum(x, axis=None, keepdims=False) -> Tensor:
    x = _t(x)
    out = x.value.sum(axis=axis, keepdims=keepdims)

    def bw(g):
        g = np.asarray(g)
        if axis is None:
            return (np.broadcast_to(g, x.value.shape).copy(),)
        if not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.value.shape).copy(),)

    return Tensor(out, (x,), bw)


def tmean(x, axis=None, keepdims=False) -> Tensor:
    x = _t(x)
    n = x.value.size if axis is None else x.value.shape[axis]
    return mul(tsum(x, axis=axis, keepdims=keepdims), 1.0 / n)


def concat_cols(parts) -> Tensor:
    parts = [_t(p) for p in parts]
    widths = [p.value.shape[1] for p in parts]
    out = np.concatenate([p.value for p in parts], axis=1)

    def bw(g):
        grads, at = [], 0
        for w in widths:
            grads.append(g[:, at:at + w])
            at += w
        return tuple(grads)

    return Tensor(out, tuple(parts), bw)


def cols(x, start, stop) -> Tensor:
    x = _t(x)

    def bw(g):
        full = np.zeros_like(x.value)
        full[:, start:stop] = g
        return (full,)

    return Tensor(x.value[:, start:stop], (x,), bw)


def where(mask: np.ndarray, a, b) -> Tensor:
    """Elementwise select with a constant condition mask."""
    a, b = _t(a), _t(b)
    m = np.asarray(mask, dtype=bool)
    return Tensor(np.where(m, a.value, b.value), (a, b),
                  lambda g: (_unbroadcast(np.where(m, g, 0.0), a.value.shape),
                             _unbroadcast(np.where(m, 0.0, g), b.value.shape)))


def cross_rows(a, b) -> Tensor:
    """Row-wise 3-D cross product for (N, 3) operands."""
    a, b = _t(a), _t(b)
    return Tensor(np.cross(a.value, b.value), (a, b),
                  lambda g: (np.cross(b.value, g), np.cross(g, a.value)))


def row_norm(x, keepdims=True, eps: float = 0.0) -> Tensor:
    x = _t(x)
    sq = tsum(mul(x, x), axis=1, keepdims=keepdims)
    return sqrt(sq if eps == 0.0 else add(sq, eps))


def normalize_rows(x, eps: float = 1e-30) -> Tensor:
    # eps below f64 resolution of O(1) norms: unit outputs stay exactly unit,
    # zero rows stay finite instead of dividing by zero
    return div(x, row_norm(x, eps=eps))


def bce_with_logits_mean(logits, targets: np.ndarray, weights: np.ndarray) -> Tensor:
    """Weighted-mean binary cross-entropy, numerically stable in the logits."""
    x = _t(logits)
    y = np.asarray(targets, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    v = x.value
    per = np.maximum(v, 0.0) - v * y + np.log1p(np.exp(-np.abs(v)))
    out = (w * per).mean()
    n = per.size

    def bw(g):
        s = np.where(v >= 0, 1.0 / (1.0 + np.exp(-np.abs(v))),
                     np.exp(-np.abs(v)) / (1.0 + np.exp(-np.abs(v))))
        return (g * w * (s - y) / n,)

    return Tensor(out, (x,), bw)


def grid_trilinear(grid: Tensor, corner_idx: np.ndarray,
                   corner_w: np.ndarray) -> Tensor:
    """Gather trilinear features from a flattened (G^3, F) grid parameter.

    ``corner_idx`` (N, 8) are flat corner indices, ``corner_w`` (N, 8) are the
    trilinear weights (precomputed outside the tape; query points carry no
    gradient). Backward scatter-adds into the grid.
    """
    g = _t(grid)
    out = (g.value[corner_idx] * corner_w[:, :, None]).sum(axis=1)

    def bw(gout):
        acc = np.zeros_like(g.value)
        np.add.at(acc, corner_idx.reshape(-1),
                  (gout[:, None, :] * corner_w[:, :, None]).reshape(-1, gout.shape[1]))
        return (acc,)

    return Tensor(out, (g,), bw)


def backward(loss: Tensor) -> None:
    """Accumulate gradients of ``loss`` into every reachable requires-grad Tensor."""
    order: list[Tensor] = []
    seen: set[int] = set()
    stack = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if id(node) in seen:
            continue
        if expanded:
            seen.add(id(node))
            order.append(node)
            continue
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen and p.requires_grad:
                stack.append((p, False))

    loss.grad = np.ones_like(loss.value)
    for node in reversed(order):
        if node.bw is None or node.grad is None:
            continue
        grads = node.bw(node.grad)
        for p, g in zip(node.parents, grads):
            if not p.requires_grad or g is None:
                continue
            if p.grad is None:
                p.grad = np.zeros_like(p.value)
            p.grad += g


class Adam:
    """Adam over a list of parameter Tensors, fixed update order."""

    def __init__(self, params: list[Tensor], lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.value) for p in params]
        self.v = [np.zeros_like(p.value) for p in params]

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad if p.grad is not None else np.zeros_like(p.value)
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p.value -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
