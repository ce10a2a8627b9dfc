"""
Dense matrix primitives with hand-written gradients.

A Matrix is a numpy array whose last two axes are (rows, cols). Any leading
axes are a batch of independent matrices; layers always act along the last
(column) axis and axis changes happen only through `transpose`.

Precision is a process-wide mode: float32 for training and inference,
float64 for gradient checking.
"""
from __future__ import annotations

import logging
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .errors import EmptyInputError, EvaluationError, ShapeError

logger = logging.getLogger(__name__)

Matrix = np.ndarray

PRECISIONS = {"f32": np.float32, "f64": np.float64}
LAYERNORM_EPSILON = 1e-6

_precision_state = {"dtype": np.float32}
_precision_lock = threading.Lock()


def get_dtype() -> type:
    """Active floating point dtype."""
    with _precision_lock:
        return _precision_state["dtype"]


def set_precision(mode: str) -> None:
    """Switch the process-wide precision ("f32" or "f64")."""
    if mode not in PRECISIONS:
        raise ValueError(f"Unknown precision '{mode}'. Valid values: {sorted(PRECISIONS)}")
    with _precision_lock:
        _precision_state["dtype"] = PRECISIONS[mode]
    logger.debug(f"[TENSOR] Precision set to {mode}")


def precision_name() -> str:
    dtype = get_dtype()
    return "f64" if dtype == np.float64 else "f32"


@contextmanager
def precision(mode: str) -> Iterator[None]:
    """Temporarily switch precision, restoring the previous mode on exit."""
    previous = precision_name()
    set_precision(mode)
    try:
        yield
    finally:
        set_precision(previous)


def _require_matrix(a: Matrix, name: str) -> None:
    if a.ndim < 2:
        raise ShapeError(f"{name} must have at least 2 axes, got shape {a.shape}")


def matmul(a: Matrix, b: Matrix) -> Matrix:
    """Matrix product over the last two axes."""
    _require_matrix(a, "left operand")
    _require_matrix(b, "right operand")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"Cannot multiply shapes {a.shape} and {b.shape}")
    return np.matmul(a, b)


def transpose(a: Matrix) -> Matrix:
    """Swap rows and columns of every matrix in a."""
    _require_matrix(a, "transpose operand")
    return np.ascontiguousarray(np.swapaxes(a, -1, -2))


@dataclass(frozen=True)
class AffineLayer:
    """Square fully connected layer acting row-wise along the last axis."""
    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        if self.weight.ndim != 2 or self.weight.shape[0] != self.weight.shape[1]:
            raise ShapeError(f"Affine weight must be square, got shape {self.weight.shape}")
        if self.bias.shape != (self.weight.shape[0],):
            raise ShapeError(
                f"Affine bias shape {self.bias.shape} does not match weight {self.weight.shape}"
            )

    @property
    def dim(self) -> int:
        return self.weight.shape[0]


@dataclass(frozen=True)
class AffineGrads:
    grad_x: np.ndarray
    grad_weight: np.ndarray
    grad_bias: np.ndarray


def _check_last_axis(x: Matrix, dim: int, op: str) -> None:
    _require_matrix(x, f"{op} input")
    if x.shape[-1] != dim:
        raise ShapeError(f"{op} expects last axis of size {dim}, got input shape {x.shape}")


def affine_forward(layer: AffineLayer, x: Matrix) -> Matrix:
    """out[r] = x[r] @ weight.T + bias for every row r."""
    _check_last_axis(x, layer.dim, "affine_forward")
    # One 2-D product over every row of the batch.
    out = x.reshape(-1, layer.dim) @ layer.weight.T
    out += layer.bias
    return out.reshape(x.shape)


def affine_backward(layer: AffineLayer, x: Matrix, grad_out: Matrix) -> AffineGrads:
    """Gradients of affine_forward; weight/bias gradients sum over all rows and batch entries."""
    _check_last_axis(x, layer.dim, "affine_backward")
    if grad_out.shape != x.shape:
        raise ShapeError(f"affine_backward grad shape {grad_out.shape} does not match input {x.shape}")

    flat_x = x.reshape(-1, layer.dim)
    flat_g = grad_out.reshape(-1, layer.dim)
    return AffineGrads(
        grad_x=(flat_g @ layer.weight).reshape(x.shape),
        grad_weight=flat_g.T @ flat_x,
        grad_bias=flat_g.sum(axis=0),
    )


@dataclass(frozen=True)
class LayerNormParams:
    gamma: np.ndarray
    beta: np.ndarray
    epsilon: float = LAYERNORM_EPSILON

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"LayerNorm epsilon must be positive, got {self.epsilon}")
        if self.gamma.ndim != 1 or self.gamma.shape != self.beta.shape:
            raise ShapeError(
                f"LayerNorm gamma {self.gamma.shape} and beta {self.beta.shape} must be equal-length vectors"
            )

    @property
    def dim(self) -> int:
        return self.gamma.shape[0]


@dataclass(frozen=True)
class LayerNormCache:
    x_hat: np.ndarray
    mean: np.ndarray
    inv_std: np.ndarray


@dataclass(frozen=True)
class LayerNormGrads:
    grad_x: np.ndarray
    grad_gamma: np.ndarray
    grad_beta: np.ndarray


def layernorm_forward(p: LayerNormParams, x: Matrix) -> tuple[Matrix, LayerNormCache]:
    """
    Normalize every row over its last-axis entries (population variance).

    Returns:
        (output, cache) where cache holds per-row mean and inverse std
    """
    if p.dim == 0 or (x.ndim >= 1 and x.shape[-1] == 0):
        raise EmptyInputError("LayerNorm over an empty dimension")
    _check_last_axis(x, p.dim, "layernorm_forward")

    mean = x.mean(axis=-1, keepdims=True)
    x_hat = x - mean
    var = np.einsum("...i,...i->...", x_hat, x_hat)[..., None] / p.dim
    inv_std = 1.0 / np.sqrt(var + p.epsilon)
    x_hat *= inv_std
    out = x_hat * p.gamma
    out += p.beta
    return out.astype(x.dtype, copy=False), LayerNormCache(x_hat=x_hat, mean=mean, inv_std=inv_std)


def layernorm_backward(p: LayerNormParams, cache: LayerNormCache, grad_out: Matrix) -> LayerNormGrads:
    if grad_out.shape != cache.x_hat.shape:
        raise ShapeError(
            f"layernorm_backward grad shape {grad_out.shape} does not match cached {cache.x_hat.shape}"
        )
    d = p.dim
    flat_g = grad_out.reshape(-1, d)
    flat_xhat = cache.x_hat.reshape(-1, d)

    dxhat = grad_out * p.gamma
    mean_dxhat = dxhat.sum(axis=-1, keepdims=True) / d
    mean_dxhat_xhat = np.einsum("...i,...i->...", dxhat, cache.x_hat)[..., None] / d
    # inv_std * (dxhat - mean(dxhat) - x_hat * mean(dxhat * x_hat))
    grad_x = cache.x_hat * mean_dxhat_xhat
    grad_x += mean_dxhat
    np.subtract(dxhat, grad_x, out=grad_x)
    grad_x *= cache.inv_std

    return LayerNormGrads(
        grad_x=grad_x.astype(grad_out.dtype, copy=False),
        grad_gamma=(flat_g * flat_xhat).sum(axis=0),
        grad_beta=flat_g.sum(axis=0),
    )


def fd_check(
    f: Callable[[np.ndarray], float],
    theta: np.ndarray,
    analytic_grad: np.ndarray,
    h: float = 1e-5,
) -> float:
    """
    Compare an analytic gradient against central finite differences.

    Args:
        f: scalar function of an array shaped like theta
        theta: evaluation point
        analytic_grad: gradient to verify, same shape as theta
        h: finite-difference step

    Returns:
        max over coordinates of |g_fd - g_an| / max(1e-12, |g_fd| + |g_an|)

    Raises:
        EvaluationError: if f returns a non-finite value
    """
    if not h > 0:
        raise ValueError(f"Finite-difference step must be positive, got {h}")
    point = np.array(theta, dtype=np.float64, copy=True)
    analytic = np.asarray(analytic_grad, dtype=np.float64)
    if analytic.shape != point.shape:
        raise ShapeError(f"Analytic gradient shape {analytic.shape} does not match theta {point.shape}")

    worst = 0.0
    for i in range(point.size):
        original = point.flat[i]
        point.flat[i] = original + h
        f_plus = f(point.copy())
        point.flat[i] = original - h
        f_minus = f(point.copy())
        point.flat[i] = original
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise EvaluationError(f"Non-finite function value at coordinate {i}")

        g_fd = (f_plus - f_minus) / (2.0 * h)
        g_an = analytic.flat[i]
        rel = abs(g_fd - g_an) / max(1e-12, abs(g_fd) + abs(g_an))
        worst = max(worst, rel)
    return float(worst)
