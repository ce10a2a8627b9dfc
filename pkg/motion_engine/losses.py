"""
Training objective: mean per-joint Euclidean error on positions and on
adjacent-frame velocities.

Both terms share `joint_distances`, the same reduction the MPJPE metric
uses, so the position loss equals MPJPE averaged over the predicted frames.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from config import LossWeights
from .errors import ShapeError

logger = logging.getLogger(__name__)


def joint_distances(pred: np.ndarray, gt: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per (frame, joint) Euclidean distance.

    Returns:
        (distances shaped (..., frames, K), difference vectors shaped (..., frames, K, 3))
    """
    if pred.shape != gt.shape:
        raise ShapeError(f"Prediction shape {pred.shape} does not match ground truth {gt.shape}")
    if pred.ndim < 2 or pred.shape[-1] % 3 != 0:
        raise ShapeError(f"Last axis must hold 3 coordinates per joint, got shape {pred.shape}")
    diff = (pred - gt).reshape(pred.shape[:-1] + (pred.shape[-1] // 3, 3))
    return np.sqrt(np.sum(diff * diff, axis=-1)), diff


def _mean_distance_grad(dist: np.ndarray, diff: np.ndarray, out_shape: tuple) -> np.ndarray:
    # Zero distance has no gradient; the subgradient 0 is used there.
    safe = np.where(dist > 0, dist, 1.0)
    unit = np.where((dist > 0)[..., None], diff / safe[..., None], 0.0)
    return (unit / dist.size).reshape(out_shape)


def velocities(x: np.ndarray) -> np.ndarray:
    """v_t = x_{t+1} - x_t inside the window."""
    return x[..., 1:, :] - x[..., :-1, :]


def loss_re(pred: np.ndarray, gt: np.ndarray) -> float:
    dist, _ = joint_distances(pred, gt)
    return float(dist.mean())


def loss_v(pred: np.ndarray, gt: np.ndarray) -> float:
    """Velocity term over the N-1 intra-window differences; 0 when N < 2."""
    if pred.shape[-2] < 2:
        logger.warning(f"[LOSS] Velocity undefined for {pred.shape[-2]} frame(s); using 0")
        joint_distances(pred, gt)
        return 0.0
    dist, _ = joint_distances(velocities(pred), velocities(gt))
    return float(dist.mean())


@dataclass(frozen=True)
class LossBreakdown:
    total: float
    grad: np.ndarray
    loss_re: float
    loss_v: float
    velocity_defined: bool = True


def total_loss(weights: LossWeights, pred: np.ndarray, gt: np.ndarray) -> LossBreakdown:
    """w_re * L_re + w_v * L_v with its exact gradient with respect to pred."""
    dist, diff = joint_distances(pred, gt)
    re_value = float(dist.mean())
    grad = weights.w_re * _mean_distance_grad(dist, diff, pred.shape)

    velocity_defined = pred.shape[-2] >= 2
    v_value = 0.0
    if velocity_defined:
        vel_pred, vel_gt = velocities(pred), velocities(gt)
        v_dist, v_diff = joint_distances(vel_pred, vel_gt)
        v_value = float(v_dist.mean())
        g_vel = weights.w_v * _mean_distance_grad(v_dist, v_diff, vel_pred.shape)
        grad[..., 1:, :] += g_vel
        grad[..., :-1, :] -= g_vel
    else:
        logger.warning(f"[LOSS] Velocity undefined for {pred.shape[-2]} frame(s); using 0")

    return LossBreakdown(
        total=weights.w_re * re_value + weights.w_v * v_value,
        grad=grad.astype(pred.dtype, copy=False),
        loss_re=re_value,
        loss_v=v_value,
        velocity_defined=velocity_defined,
    )
