"""
Gradient-check framework.

Each GradCheck builds a small random problem for one component, evaluates
its analytic gradient and compares it with central finite differences via
`fd_check`. Checks always run in float64. Adding a component means writing a
GradCheck subclass and registering it; the CLI picks it up automatically.
"""
from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd

from config import LossWeights, ModelConfig
from .dct import apply_dct, apply_idct, build_dct_basis, dct_backward, idct_backward
from .losses import total_loss
from .model import COORD_SCALE, SiMlpeParams, backward, forward, one_fc_config, param_shapes
from .tensor_core import (
    AffineLayer,
    LayerNormParams,
    affine_backward,
    affine_forward,
    fd_check,
    layernorm_backward,
    layernorm_forward,
    precision,
)

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-4
DEFAULT_SEEDS = 20


class _Packer:
    """Flatten named arrays into one vector and back."""

    def __init__(self, shapes: Dict[str, Tuple[int, ...]]):
        self.shapes = shapes
        self.sizes = [int(np.prod(s)) for s in shapes.values()]

    def pack(self, arrays: Dict[str, np.ndarray]) -> np.ndarray:
        return np.concatenate([np.asarray(arrays[name], dtype=np.float64).ravel() for name in self.shapes])

    def unpack(self, theta: np.ndarray) -> Dict[str, np.ndarray]:
        out, offset = {}, 0
        for (name, shape), size in zip(self.shapes.items(), self.sizes):
            out[name] = theta[offset : offset + size].reshape(shape)
            offset += size
        return out


class GradCheck(ABC):
    """One component whose hand-written gradient is verified numerically."""

    @property
    @abstractmethod
    def name(self) -> str:
        pass

    @property
    @abstractmethod
    def description(self) -> str:
        pass

    @abstractmethod
    def problem(self, rng: np.random.Generator) -> Tuple[Callable[[np.ndarray], float], np.ndarray, np.ndarray]:
        """Return (f, theta, analytic gradient of f at theta)."""

    def run(self, seed: int, inject_fault: bool = False, h: float = 1e-5) -> float:
        with precision("f64"):
            f, theta, analytic = self.problem(np.random.Generator(np.random.PCG64(seed)))
            if inject_fault:
                analytic = 2.0 * analytic
            return fd_check(f, theta, analytic, h)


class AffineCheck(GradCheck):
    name = "affine"
    description = "affine layer: weight, bias and input"

    def problem(self, rng):
        d, rows = int(rng.integers(2, 9)), int(rng.integers(1, 9))
        x = rng.normal(size=(rows, d))
        upstream = rng.normal(size=(rows, d))
        packer = _Packer({"weight": (d, d), "bias": (d,), "x": (rows, d)})

        def f(theta):
            a = packer.unpack(theta)
            return float(np.sum(upstream * affine_forward(AffineLayer(a["weight"], a["bias"]), a["x"])))

        arrays = {"weight": rng.normal(size=(d, d)), "bias": rng.normal(size=d), "x": x}
        grads = affine_backward(AffineLayer(arrays["weight"], arrays["bias"]), x, upstream)
        analytic = packer.pack({"weight": grads.grad_weight, "bias": grads.grad_bias, "x": grads.grad_x})
        return f, packer.pack(arrays), analytic


class LayerNormCheck(GradCheck):
    name = "layernorm"
    description = "layer normalization: gamma, beta and input"

    def problem(self, rng):
        d, rows = int(rng.integers(3, 9)), int(rng.integers(1, 9))
        upstream = rng.normal(size=(rows, d))
        packer = _Packer({"gamma": (d,), "beta": (d,), "x": (rows, d)})
        arrays = {"gamma": 1.0 + 0.5 * rng.normal(size=d), "beta": rng.normal(size=d), "x": rng.normal(size=(rows, d))}

        def f(theta):
            a = packer.unpack(theta)
            out, _ = layernorm_forward(LayerNormParams(a["gamma"], a["beta"]), a["x"])
            return float(np.sum(upstream * out))

        p = LayerNormParams(arrays["gamma"], arrays["beta"])
        _, cache = layernorm_forward(p, arrays["x"])
        grads = layernorm_backward(p, cache, upstream)
        analytic = packer.pack({"gamma": grads.grad_gamma, "beta": grads.grad_beta, "x": grads.grad_x})
        return f, packer.pack(arrays), analytic


class DctPathCheck(GradCheck):
    name = "dct_path"
    description = "forward and inverse DCT along the temporal axis"

    def problem(self, rng):
        T, C = int(rng.integers(1, 9)), int(rng.integers(1, 7))
        basis = build_dct_basis(T)
        up_dct, up_idct = rng.normal(size=(T, C)), rng.normal(size=(T, C))

        def f(theta):
            x = theta.reshape(T, C)
            return float(np.sum(up_dct * apply_dct(basis, x)) + np.sum(up_idct * apply_idct(basis, x)))

        analytic = dct_backward(basis, up_dct) + idct_backward(basis, up_idct)
        return f, rng.normal(size=(T, C)).ravel(), analytic.ravel()


class LossCheck(GradCheck):
    name = "loss"
    description = "position plus velocity loss with respect to the prediction"

    def problem(self, rng):
        N, C = 10, 6
        gt = rng.normal(size=(N, C))
        weights = LossWeights(w_re=float(rng.uniform(0.1, 2.0)), w_v=float(rng.uniform(0.1, 2.0)))

        def f(theta):
            return total_loss(weights, theta.reshape(N, C), gt).total

        pred = gt + rng.normal(size=(N, C))
        return f, pred.ravel(), total_loss(weights, pred, gt).grad.ravel()


class _ModelCheck(GradCheck):
    """Loss gradient with respect to every network parameter."""

    @abstractmethod
    def model_config(self) -> ModelConfig:
        pass

    def problem(self, rng):
        config = self.model_config()
        shapes = param_shapes(config)
        packer = _Packer(shapes)
        arrays = {}
        for name, shape in shapes.items():
            if name.endswith("ln.gamma"):
                arrays[name] = 1.0 + 0.2 * rng.normal(size=shape)
            else:
                arrays[name] = 0.3 * rng.normal(size=shape)
        # Millimetre-sized inputs keep the values inside the network near unit scale.
        x = rng.normal(size=(config.input_len, config.channels)) / COORD_SCALE
        gt = x[-1] + rng.normal(size=(config.output_len, config.channels)) / COORD_SCALE
        dct = build_dct_basis(config.input_len) if config.use_dct else None
        weights = LossWeights()

        def f(theta):
            params = SiMlpeParams.from_arrays(config, packer.unpack(theta))
            prediction, _ = forward(params, config, dct, x)
            return total_loss(weights, prediction.absolute, gt).total

        theta = packer.pack(arrays)
        params = SiMlpeParams.from_arrays(config, packer.unpack(theta))
        prediction, cache = forward(params, config, dct, x)
        grads = backward(params, config, cache, total_loss(weights, prediction.absolute, gt).grad)
        return f, theta, packer.pack(grads)


class OneFcCheck(_ModelCheck):
    name = "one_fc"
    description = "single temporal FC baseline (T=8, C=6)"

    def model_config(self):
        return one_fc_config(input_len=8, output_len=4, channels=6)


class FullModelCheck(_ModelCheck):
    name = "full_model"
    description = "full network (T=8, N=4, C=6, 2 blocks, random fc_out)"

    def model_config(self):
        return ModelConfig(input_len=8, output_len=4, channels=6, num_blocks=2)


@dataclass(frozen=True)
class GradCheckResult:
    component: str
    max_rel_error: float
    seeds: int
    passed: bool


class GradCheckRegistry:
    """
    Central registry of gradient checks.

    Adding a check:
    1. Create a GradCheck subclass
    2. Register it here
    """

    def __init__(self):
        self._checks: List[GradCheck] = []

    def register(self, check: GradCheck):
        self._checks.append(check)

    def get_all_checks(self) -> List[GradCheck]:
        return self._checks.copy()

    def get_check(self, name: str) -> Optional[GradCheck]:
        for check in self._checks:
            if check.name == name:
                return check
        return None

    def run_all(
        self,
        seeds: Iterable[int] = range(DEFAULT_SEEDS),
        tolerance: float = DEFAULT_TOLERANCE,
        inject_fault: Optional[str] = None,
    ) -> List[GradCheckResult]:
        """
        Run every check over every seed.

        Args:
            inject_fault: name of one component whose analytic gradient is
                doubled, to confirm the harness flags it
        """
        if inject_fault is not None and self.get_check(inject_fault) is None:
            raise ValueError(
                f"Unknown gradcheck component '{inject_fault}'. Valid: {[c.name for c in self._checks]}"
            )
        seeds = list(seeds)
        results = []
        for check in self._checks:
            worst = max(check.run(seed, inject_fault=(check.name == inject_fault)) for seed in seeds)
            passed = worst < tolerance
            results.append(GradCheckResult(check.name, worst, len(seeds), passed))
            log = logger.info if passed else logger.error
            log(f"[GRADCHECK] {check.name}: max rel error {worst:.3e} over {len(seeds)} seeds ({'pass' if passed else 'FAIL'})")
        return results


def results_frame(results: List[GradCheckResult]) -> pd.DataFrame:
    return pd.DataFrame(
        [(r.component, r.max_rel_error, r.seeds, r.passed) for r in results],
        columns=["component", "max_rel_error", "seeds", "passed"],
    )


default_registry = GradCheckRegistry()
default_registry.register(AffineCheck())
default_registry.register(LayerNormCheck())
default_registry.register(DctPathCheck())
default_registry.register(LossCheck())
default_registry.register(OneFcCheck())
default_registry.register(FullModelCheck())
