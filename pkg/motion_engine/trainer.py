"""
Mini-batch training loop.

Each step draws `batch_size` windows uniformly with replacement, runs one
batched forward pass, takes the mean loss over the batch, backpropagates and
applies an Adam update at the scheduled learning rate. The sampler and the
initializer use separate PCG64 streams derived from the run seed, so a seed
fixes the whole trajectory.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

from config import ConfigurationError, LossWeights, LrSchedule, ModelConfig
from .dct import build_dct_basis
from .errors import EvaluationError
from .losses import total_loss
from .model import SiMlpeParams, backward, count_parameters, forward, init_params
from .optim import AdamState, adam_step, lr_at
from .preprocess import TrainSample, WindowBank
from .report_fields import TRACE_COLUMNS, TraceField
from .tensor_core import get_dtype

logger = logging.getLogger(__name__)

DataSource = Union[WindowBank, Sequence[TrainSample]]


@dataclass
class TrainResult:
    params: SiMlpeParams
    trace: pd.DataFrame
    steps: int

    @property
    def initial_loss(self) -> float:
        return float(self.trace[TraceField.LOSS_TOTAL.value].iloc[0])

    @property
    def final_loss(self) -> float:
        return float(self.trace[TraceField.LOSS_TOTAL.value].iloc[-1])


def sampler_rng(seed: int) -> np.random.Generator:
    """Batch sampler stream; independent of the PCG64(seed) stream used for init."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed).spawn(1)[0]))


def _as_bank(source: DataSource, config: ModelConfig) -> WindowBank:
    if isinstance(source, WindowBank):
        bank = source
    else:
        if not source:
            raise ConfigurationError("Training data source is empty: no windows to sample")
        bank = WindowBank.from_samples(source, dtype=get_dtype())
    if len(bank) == 0:
        raise ConfigurationError("Training data source is empty: no windows to sample")
    expected_in = (config.input_len, config.channels)
    expected_out = (config.output_len, config.channels)
    if bank.inputs.shape[1:] != expected_in or bank.targets.shape[1:] != expected_out:
        raise ConfigurationError(
            f"Training windows {bank.inputs.shape[1:]}/{bank.targets.shape[1:]} do not match "
            f"model shape {expected_in}/{expected_out}"
        )
    return bank


def train(
    config: ModelConfig,
    source: DataSource,
    weights: LossWeights,
    schedule: LrSchedule,
    seed: int,
    batch_size: int = 256,
    log_every: int = 100,
    show_progress: bool = False,
    initial: Optional[SiMlpeParams] = None,
) -> TrainResult:
    """
    Train for schedule.total_steps steps.

    Args:
        config: network shape
        source: TrainSamples or a pre-stacked WindowBank
        weights: loss term weights
        schedule: learning-rate schedule; total_steps sets the run length
        seed: run seed
        batch_size: windows per step
        log_every: trace interval; the first and last steps are always recorded
        show_progress: draw a tqdm bar on stderr
        initial: start from these parameters instead of init_params(config, seed)

    Returns:
        TrainResult with the trained parameters and the loss trace
    """
    config.validate()
    weights.validate()
    schedule.validate()
    bank = _as_bank(source, config)
    dtype = get_dtype()

    params = initial if initial is not None else init_params(config, seed)
    dct = build_dct_basis(config.input_len) if config.use_dct else None
    state = AdamState.fresh(params.named_arrays())
    rng = sampler_rng(seed)

    logger.info(
        f"[TRAIN] Starting: {count_parameters(params)} params, {len(bank)} windows, "
        f"{schedule.total_steps} steps, batch {batch_size}, seed {seed}"
    )

    records = []
    progress = tqdm(range(schedule.total_steps), desc="train", disable=not show_progress, leave=False)
    for step in progress:
        idx = rng.integers(0, len(bank), size=batch_size)
        x = bank.inputs[idx].astype(dtype, copy=False)
        y = bank.targets[idx].astype(dtype, copy=False)

        prediction, cache = forward(params, config, dct, x)
        loss = total_loss(weights, prediction.absolute, y)
        if not np.isfinite(loss.total):
            raise EvaluationError(f"Training loss became non-finite at step {step}")
        grads = backward(params, config, cache, loss.grad)

        lr = lr_at(schedule, step)
        new_arrays, state = adam_step(state, params.named_arrays(), grads, lr)
        params = SiMlpeParams.from_arrays(config, new_arrays, validate=False)

        if step % log_every == 0 or step == schedule.total_steps - 1:
            records.append((step, lr, loss.total, loss.loss_re, loss.loss_v))
            progress.set_postfix(loss=f"{loss.total:.3f}")
            logger.info(
                f"[TRAIN] step {step}: lr={lr:.2e} loss={loss.total:.4f} "
                f"(re={loss.loss_re:.4f}, v={loss.loss_v:.4f})"
            )

    trace = pd.DataFrame.from_records(records, columns=list(TRACE_COLUMNS))
    logger.info(f"[TRAIN] Finished {schedule.total_steps} steps, final loss {trace.iloc[-1][TraceField.LOSS_TOTAL.value]:.4f}")
    return TrainResult(params=params, trace=trace, steps=schedule.total_steps)
