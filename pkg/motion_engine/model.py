"""
All-MLP motion predictor.

Pipeline for one input window x (T x C), millimetres in and out:
    scale to metres -> DCT -> fc_in (along C) -> transpose -> n x [y + LN(FC(y))] (along T)
        -> transpose -> fc_out (along C) -> IDCT -> first N rows back in millimetres + x[T-1]

num_blocks == 0 selects the One-FC baseline: a single T x T layer applied
after the transpose, with no spatial layers and no LayerNorm.

Every function also accepts a batch of windows stacked on a leading axis.
"""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from config import ModelConfig
from .dct import DctBasis, apply_dct, apply_idct, idct_backward
from .errors import CacheMismatchError, InputError, ShapeError
from .tensor_core import (
    AffineLayer,
    LayerNormCache,
    LayerNormParams,
    affine_backward,
    affine_forward,
    get_dtype,
    layernorm_backward,
    layernorm_forward,
    transpose,
)

ParamArrays = Dict[str, np.ndarray]

# Coordinates arrive in millimetres; the network itself runs in metres.
COORD_SCALE = 1e-3
# Block FCs start this close to zero so every block begins as the identity
# and LayerNorm starts in its near-linear range.
BLOCK_INIT_GAIN = 1e-8


@dataclass(frozen=True)
class MlpBlock:
    fc: AffineLayer
    ln: LayerNormParams


@dataclass(frozen=True)
class SiMlpeParams:
    """All learnable weights. Optional layers are None in the One-FC mode."""
    fc_in: Optional[AffineLayer]
    blocks: Tuple[MlpBlock, ...]
    fc_out: Optional[AffineLayer]
    one_fc: Optional[AffineLayer] = None

    def named_arrays(self) -> ParamArrays:
        """Every learnable array in declaration order."""
        arrays: ParamArrays = OrderedDict()
        if self.fc_in is not None:
            arrays["fc_in.weight"] = self.fc_in.weight
            arrays["fc_in.bias"] = self.fc_in.bias
        if self.one_fc is not None:
            arrays["one_fc.weight"] = self.one_fc.weight
            arrays["one_fc.bias"] = self.one_fc.bias
        for i, block in enumerate(self.blocks):
            arrays[f"blocks.{i}.fc.weight"] = block.fc.weight
            arrays[f"blocks.{i}.fc.bias"] = block.fc.bias
            arrays[f"blocks.{i}.ln.gamma"] = block.ln.gamma
            arrays[f"blocks.{i}.ln.beta"] = block.ln.beta
        if self.fc_out is not None:
            arrays["fc_out.weight"] = self.fc_out.weight
            arrays["fc_out.bias"] = self.fc_out.bias
        return arrays

    @classmethod
    def from_arrays(cls, config: ModelConfig, arrays: ParamArrays, validate: bool = True) -> "SiMlpeParams":
        """Rebuild from named arrays. validate=False skips the layout check for arrays that came from this config."""
        if validate:
            expected = param_shapes(config)
            if list(arrays) != list(expected):
                raise ShapeError(f"Parameter names {list(arrays)[:4]}... do not match config layout")
            for name, shape in expected.items():
                if arrays[name].shape != shape:
                    raise ShapeError(f"Parameter '{name}' has shape {arrays[name].shape}, expected {shape}")

        def affine(prefix: str) -> AffineLayer:
            return AffineLayer(weight=arrays[f"{prefix}.weight"], bias=arrays[f"{prefix}.bias"])

        if config.is_one_fc:
            return cls(fc_in=None, blocks=(), fc_out=None, one_fc=affine("one_fc"))
        blocks = tuple(
            MlpBlock(
                fc=affine(f"blocks.{i}.fc"),
                ln=LayerNormParams(gamma=arrays[f"blocks.{i}.ln.gamma"], beta=arrays[f"blocks.{i}.ln.beta"]),
            )
            for i in range(config.num_blocks)
        )
        return cls(fc_in=affine("fc_in"), blocks=blocks, fc_out=affine("fc_out"))


def param_shapes(config: ModelConfig) -> "OrderedDict[str, tuple]":
    """Expected name -> shape layout for a config, in declaration order."""
    shapes: "OrderedDict[str, tuple]" = OrderedDict()
    C, d = config.channels, config.block_dim
    if config.is_one_fc:
        shapes["one_fc.weight"] = (config.input_len, config.input_len)
        shapes["one_fc.bias"] = (config.input_len,)
        return shapes
    shapes["fc_in.weight"] = (C, C)
    shapes["fc_in.bias"] = (C,)
    for i in range(config.num_blocks):
        shapes[f"blocks.{i}.fc.weight"] = (d, d)
        shapes[f"blocks.{i}.fc.bias"] = (d,)
        shapes[f"blocks.{i}.ln.gamma"] = (d,)
        shapes[f"blocks.{i}.ln.beta"] = (d,)
    shapes["fc_out.weight"] = (C, C)
    shapes["fc_out.bias"] = (C,)
    return shapes


def param_count(config: ModelConfig) -> int:
    """Closed form: 2(C^2 + C) + n(d^2 + d + 2d), or T^2 + T for One-FC."""
    if config.is_one_fc:
        T = config.input_len
        return T * T + T
    C, d, n = config.channels, config.block_dim, config.num_blocks
    return 2 * (C * C + C) + n * (d * d + d + 2 * d)


def count_parameters(params: SiMlpeParams) -> int:
    """Tally learnable scalars by walking the parameter structure."""
    return int(sum(arr.size for arr in params.named_arrays().values()))


def _uniform(rng: np.random.Generator, dim: int, gain: float = 1.0) -> np.ndarray:
    bound = gain * np.sqrt(6.0 / (dim + dim))
    return rng.uniform(-bound, bound, size=(dim, dim))


def init_params(config: ModelConfig, seed: int) -> SiMlpeParams:
    """
    Deterministic initialization from a PCG64 stream.

    fc_in: uniform in +-sqrt(6/(fan_in+fan_out)), zero bias. Block FCs: the same
    bound scaled by BLOCK_INIT_GAIN, zero bias.
    LayerNorm: gamma=1, beta=0. fc_out (and the One-FC layer) start at exactly
    zero so the untrained model reproduces the Last-Frame baseline.
    """
    config.validate()
    dtype = get_dtype()
    rng = np.random.Generator(np.random.PCG64(seed))
    C, d = config.channels, config.block_dim

    def zeros_layer(dim: int) -> AffineLayer:
        return AffineLayer(weight=np.zeros((dim, dim), dtype=dtype), bias=np.zeros(dim, dtype=dtype))

    if config.is_one_fc:
        return SiMlpeParams(fc_in=None, blocks=(), fc_out=None, one_fc=zeros_layer(config.input_len))

    fc_in = AffineLayer(weight=_uniform(rng, C).astype(dtype), bias=np.zeros(C, dtype=dtype))
    blocks = tuple(
        MlpBlock(
            fc=AffineLayer(weight=_uniform(rng, d, BLOCK_INIT_GAIN).astype(dtype), bias=np.zeros(d, dtype=dtype)),
            ln=LayerNormParams(gamma=np.ones(d, dtype=dtype), beta=np.zeros(d, dtype=dtype)),
        )
        for _ in range(config.num_blocks)
    )
    return SiMlpeParams(fc_in=fc_in, blocks=blocks, fc_out=zeros_layer(C))


@dataclass(frozen=True)
class Prediction:
    absolute: np.ndarray
    residual: np.ndarray


@dataclass
class ForwardCache:
    params: SiMlpeParams
    config: ModelConfig
    basis: Optional[DctBasis]
    dct_out: np.ndarray
    block_inputs: List[np.ndarray] = field(default_factory=list)
    block_fc_outputs: List[np.ndarray] = field(default_factory=list)
    ln_caches: List[Optional[LayerNormCache]] = field(default_factory=list)
    one_fc_input: Optional[np.ndarray] = None
    fc_out_input: Optional[np.ndarray] = None


def _check_input(config: ModelConfig, x: np.ndarray) -> None:
    if x.ndim < 2 or x.shape[-2:] != (config.input_len, config.channels):
        raise ShapeError(
            f"Model expects input windows of shape ({config.input_len}, {config.channels}), got {x.shape}"
        )
    if not np.all(np.isfinite(x)):
        raise InputError("Model input contains non-finite values")


def forward(
    params: SiMlpeParams,
    config: ModelConfig,
    dct: Optional[DctBasis],
    x: np.ndarray,
) -> Tuple[Prediction, ForwardCache]:
    """
    Predict the next N frames.

    Returns:
        (Prediction, cache) where Prediction.absolute = residual + last input frame
    """
    _check_input(config, x)
    if config.use_dct and (dct is None or dct.size != config.input_len):
        raise ShapeError(f"DCT basis size must equal input_len={config.input_len}")

    scaled = x * COORD_SCALE
    y = apply_dct(dct, scaled) if config.use_dct else scaled
    cache = ForwardCache(params=params, config=config, basis=dct, dct_out=y)

    if params.fc_in is not None:
        y = affine_forward(params.fc_in, y)
    if config.temporal:
        y = transpose(y)
    if params.one_fc is not None:
        cache.one_fc_input = y
        y = affine_forward(params.one_fc, y)

    for block in params.blocks:
        cache.block_inputs.append(y)
        h = affine_forward(block.fc, y)
        cache.block_fc_outputs.append(h)
        if config.use_layernorm:
            h, ln_cache = layernorm_forward(block.ln, h)
            cache.ln_caches.append(ln_cache)
        else:
            cache.ln_caches.append(None)
        y = y + h

    if config.temporal:
        y = transpose(y)
    if params.fc_out is not None:
        cache.fc_out_input = y
        y = affine_forward(params.fc_out, y)

    z = apply_idct(dct, y) if config.use_dct else y
    residual = z[..., : config.output_len, :] / COORD_SCALE
    absolute = residual + x[..., -1:, :]
    return Prediction(absolute=absolute, residual=residual), cache


def backward(
    params: SiMlpeParams,
    config: ModelConfig,
    cache: ForwardCache,
    grad_prediction: np.ndarray,
) -> ParamArrays:
    """
    Parameter gradients given dLoss/dPrediction.absolute.

    Returns:
        name -> gradient, same layout as params.named_arrays()
    """
    if cache.params is not params or cache.config != config:
        raise CacheMismatchError("Forward cache was produced by different parameters or config")
    batch_shape = cache.dct_out.shape[:-2]
    expected = batch_shape + (config.output_len, config.channels)
    if grad_prediction.shape != expected:
        raise ShapeError(f"Prediction gradient shape {grad_prediction.shape}, expected {expected}")

    grads: ParamArrays = OrderedDict()
    g = np.zeros(batch_shape + (config.input_len, config.channels), dtype=grad_prediction.dtype)
    g[..., : config.output_len, :] = grad_prediction / COORD_SCALE
    if config.use_dct:
        g = idct_backward(cache.basis, g)

    if params.fc_out is not None:
        out_grads = affine_backward(params.fc_out, cache.fc_out_input, g)
        grads["fc_out.weight"] = out_grads.grad_weight
        grads["fc_out.bias"] = out_grads.grad_bias
        g = out_grads.grad_x
    if config.temporal:
        g = transpose(g)

    for i in reversed(range(len(params.blocks))):
        block = params.blocks[i]
        g_h = g
        if config.use_layernorm:
            ln_grads = layernorm_backward(block.ln, cache.ln_caches[i], g_h)
            grads[f"blocks.{i}.ln.beta"] = ln_grads.grad_beta
            grads[f"blocks.{i}.ln.gamma"] = ln_grads.grad_gamma
            g_h = ln_grads.grad_x
        else:
            grads[f"blocks.{i}.ln.beta"] = np.zeros_like(block.ln.beta)
            grads[f"blocks.{i}.ln.gamma"] = np.zeros_like(block.ln.gamma)
        fc_grads = affine_backward(block.fc, cache.block_inputs[i], g_h)
        grads[f"blocks.{i}.fc.bias"] = fc_grads.grad_bias
        grads[f"blocks.{i}.fc.weight"] = fc_grads.grad_weight
        g = g + fc_grads.grad_x

    if params.one_fc is not None:
        one_grads = affine_backward(params.one_fc, cache.one_fc_input, g)
        grads["one_fc.weight"] = one_grads.grad_weight
        grads["one_fc.bias"] = one_grads.grad_bias
        g = one_grads.grad_x
    if config.temporal:
        g = transpose(g)

    if params.fc_in is not None:
        in_grads = affine_backward(params.fc_in, cache.dct_out, g)
        grads["fc_in.weight"] = in_grads.grad_weight
        grads["fc_in.bias"] = in_grads.grad_bias

    order = params.named_arrays()
    return OrderedDict((name, grads[name].astype(order[name].dtype, copy=False)) for name in order)


def last_frame_baseline(x: np.ndarray, N: int) -> np.ndarray:
    """Repeat the last observed frame N times."""
    if x.ndim < 2 or x.shape[-2] < 1:
        raise ShapeError(f"Last-Frame baseline needs at least one input frame, got shape {x.shape}")
    return np.repeat(x[..., -1:, :], N, axis=-2)


def one_fc_config(input_len: int = 50, output_len: int = 10, channels: int = 66, use_dct: bool = True) -> ModelConfig:
    """Config selecting the single temporal FC baseline."""
    return ModelConfig(
        input_len=input_len,
        output_len=output_len,
        channels=channels,
        num_blocks=0,
        use_transpose=True,
        use_layernorm=False,
        use_dct=use_dct,
    )
