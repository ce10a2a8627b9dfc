"""
Adam with bias correction and the step-decay learning-rate schedule.

adam_step is functional: it returns new parameter arrays and a new state and
never mutates its inputs, so identical inputs give bitwise-identical
trajectories.
"""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple

import numpy as np

from config import LrSchedule
from .errors import ShapeError


@dataclass(frozen=True)
class AdamState:
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8

    @classmethod
    def fresh(cls, params: Mapping[str, np.ndarray], **hyper) -> "AdamState":
        """Zero moments shaped like params."""
        def zeros() -> "OrderedDict[str, np.ndarray]":
            return OrderedDict((k, np.zeros_like(p)) for k, p in params.items())

        return cls(step=0, m=zeros(), v=zeros(), **hyper)


def adam_step(
    state: AdamState,
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    lr: float,
) -> Tuple["OrderedDict[str, np.ndarray]", AdamState]:
    """
    One Adam update:
        m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
        theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)

    Returns:
        (new params, new state)
    """
    if list(params) != list(grads) or list(params) != list(state.m):
        raise ShapeError("Parameter, gradient and optimizer-state names must match")

    t = state.step + 1
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t

    new_params: "OrderedDict[str, np.ndarray]" = OrderedDict()
    new_m: "OrderedDict[str, np.ndarray]" = OrderedDict()
    new_v: "OrderedDict[str, np.ndarray]" = OrderedDict()
    for name, theta in params.items():
        g = grads[name]
        if g.shape != theta.shape or state.m[name].shape != theta.shape:
            raise ShapeError(f"Shape mismatch for '{name}': param {theta.shape}, grad {g.shape}")
        m = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        v = state.beta2 * state.v[name] + (1.0 - state.beta2) * (g * g)
        update = lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps_adam)
        new_params[name] = (theta - update).astype(theta.dtype, copy=False)
        new_m[name] = m.astype(theta.dtype, copy=False)
        new_v[name] = v.astype(theta.dtype, copy=False)

    new_state = AdamState(
        step=t, m=new_m, v=new_v, beta1=state.beta1, beta2=state.beta2, eps_adam=state.eps_adam
    )
    return new_params, new_state


def lr_at(schedule: LrSchedule, step: int) -> float:
    """initial_lr before drop_step, final_lr from drop_step on."""
    if step < 0:
        raise ValueError(f"step must be >= 0, got {step}")
    return schedule.initial_lr if step < schedule.drop_step else schedule.final_lr
