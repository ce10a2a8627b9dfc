"""
Auto-regressive rollout and MPJPE reporting.

MPJPE at a horizon is the error at that single frame (80 ms -> frame index 1
at 25 FPS), averaged over test windows. The network, the Last-Frame baseline
and any other predictor share `evaluate_predictor`, so their reports are
computed by exactly the same reduction.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd

from config import DEFAULT_HORIZONS_MS, ConfigurationError, ModelConfig
from .dct import DctBasis
from .errors import InvalidSizeError, ShapeError
from .losses import joint_distances
from .model import SiMlpeParams, count_parameters, forward, last_frame_baseline
from .motion_io import MotionSequence
from .preprocess import TrainSample, make_windows
from .report_fields import REPORT_COLUMNS, ReportField

logger = logging.getLogger(__name__)

# (batch of input windows, horizon in frames) -> (batch, horizon, C)
Predictor = Callable[[np.ndarray, int], np.ndarray]


@dataclass
class EvalReport:
    horizons_ms: List[int]
    frame_indices: List[int]
    mpjpe_mm: List[float]
    num_samples: int
    param_count: int = 0
    model_tag: str = "model"

    def to_frame(self) -> pd.DataFrame:
        """One row per horizon: horizon_ms, frame_index, mpjpe_mm."""
        return pd.DataFrame(
            {
                ReportField.HORIZON_MS.value: self.horizons_ms,
                ReportField.FRAME_INDEX.value: self.frame_indices,
                ReportField.MPJPE_MM.value: self.mpjpe_mm,
            },
            columns=list(REPORT_COLUMNS),
        )

    def at(self, horizon_ms: int) -> float:
        return self.mpjpe_mm[self.horizons_ms.index(horizon_ms)]

    def to_dict(self) -> dict:
        return {
            "model_tag": self.model_tag,
            "param_count": self.param_count,
            "num_samples": self.num_samples,
            "mpjpe_mm": dict(zip(self.horizons_ms, self.mpjpe_mm)),
        }


def horizon_frame_indices(horizons_ms: Sequence[int], frame_rate: float) -> List[int]:
    """
    Map horizons to 0-based frame indices: h * frame_rate / 1000 - 1.

    Raises:
        ConfigurationError: if a horizon is not a positive multiple of the
            frame interval; the message lists valid values
    """
    if not horizons_ms:
        raise ConfigurationError("At least one horizon is required")
    interval = 1000.0 / frame_rate
    indices = []
    for h in horizons_ms:
        frames = h * frame_rate / 1000.0
        rounded = round(frames)
        if rounded < 1 or abs(frames - rounded) > 1e-9:
            examples = ", ".join(f"{interval * k:g}" for k in (1, 2, 3, 4))
            raise ConfigurationError(
                f"Horizon {h} ms is not a positive multiple of the {interval:g} ms frame interval "
                f"at {frame_rate:g} FPS. Valid values: {examples}, ..."
            )
        indices.append(int(rounded) - 1)
    return indices


def rollout(params: SiMlpeParams, config: ModelConfig, dct: Optional[DctBasis], x: np.ndarray, H: int) -> np.ndarray:
    """
    Predict H frames by feeding predictions back in.

    Each pass predicts N frames and slides the T-frame window forward by N;
    ceil(H / N) passes are made and the first H frames returned.
    """
    if H < 1:
        raise InvalidSizeError(f"Rollout horizon must be >= 1, got {H}")
    T, N = config.input_len, config.output_len
    window = x
    chunks = []
    for _ in range(math.ceil(H / N)):
        prediction, _ = forward(params, config, dct, window)
        chunks.append(prediction.absolute)
        window = np.concatenate([window, prediction.absolute], axis=-2)[..., -T:, :]
    return np.concatenate(chunks, axis=-2)[..., :H, :]


def last_frame_rollout(x: np.ndarray, H: int) -> np.ndarray:
    if H < 1:
        raise InvalidSizeError(f"Rollout horizon must be >= 1, got {H}")
    return last_frame_baseline(x, H)


def mpjpe(pred: np.ndarray, gt: np.ndarray, frame_index: int) -> float:
    """Mean joint distance (mm) at one frame; a leading batch axis is averaged too."""
    if not 0 <= frame_index < pred.shape[-2]:
        raise InvalidSizeError(f"Frame index {frame_index} out of range for {pred.shape[-2]} frames")
    dist, _ = joint_distances(pred[..., frame_index, None, :], gt[..., frame_index, None, :])
    return float(dist.mean())


def evaluation_windows(
    sequences: Iterable[MotionSequence],
    input_len: int,
    horizon_frames: int,
    stride: int,
) -> List[TrainSample]:
    """Test windows whose targets cover the full rollout horizon."""
    samples: List[TrainSample] = []
    for seq in sequences:
        samples.extend(make_windows(seq, input_len, horizon_frames, stride))
    return samples


def evaluate_predictor(
    predict: Predictor,
    samples: Sequence[TrainSample],
    horizons_ms: Sequence[int] = DEFAULT_HORIZONS_MS,
    frame_rate: float = 25.0,
    model_tag: str = "model",
    param_count: int = 0,
    chunk_size: int = 512,
) -> EvalReport:
    indices = horizon_frame_indices(horizons_ms, frame_rate)
    H = max(indices) + 1
    if not samples:
        raise ConfigurationError("No test windows to evaluate")
    for s in samples:
        if s.target.shape[0] < H:
            raise ShapeError(f"Test window target has {s.target.shape[0]} frames, rollout needs {H}")

    totals = np.zeros(len(indices), dtype=np.float64)
    for start in range(0, len(samples), chunk_size):
        chunk = samples[start : start + chunk_size]
        x = np.stack([s.input for s in chunk])
        gt = np.stack([s.target[:H] for s in chunk])
        pred = predict(x, H)
        for k, idx in enumerate(indices):
            dist, _ = joint_distances(pred[:, idx, None, :], gt[:, idx, None, :].astype(pred.dtype))
            totals[k] += float(dist.mean(axis=(-2, -1)).astype(np.float64).sum())

    values = [float(t / len(samples)) for t in totals]
    report = EvalReport(
        horizons_ms=list(horizons_ms),
        mpjpe_mm=values,
        num_samples=len(samples),
        param_count=param_count,
        model_tag=model_tag,
        frame_indices=indices,
    )
    logger.info(
        f"[EVAL] {model_tag}: {len(samples)} windows, "
        + ", ".join(f"{h}ms={v:.2f}" for h, v in zip(report.horizons_ms, values))
    )
    return report


def evaluate(
    params: SiMlpeParams,
    config: ModelConfig,
    dct: Optional[DctBasis],
    samples: Sequence[TrainSample],
    horizons_ms: Sequence[int] = DEFAULT_HORIZONS_MS,
    frame_rate: float = 25.0,
    model_tag: str = "siMLPe",
) -> EvalReport:
    dtype = next(iter(params.named_arrays().values())).dtype

    def predict(x: np.ndarray, H: int) -> np.ndarray:
        return rollout(params, config, dct, x.astype(dtype, copy=False), H)

    return evaluate_predictor(
        predict,
        samples,
        horizons_ms,
        frame_rate,
        model_tag=model_tag,
        param_count=count_parameters(params),
    )


def evaluate_last_frame(
    samples: Sequence[TrainSample],
    horizons_ms: Sequence[int] = DEFAULT_HORIZONS_MS,
    frame_rate: float = 25.0,
    dtype=None,
) -> EvalReport:
    def predict(x: np.ndarray, H: int) -> np.ndarray:
        return last_frame_rollout(x if dtype is None else x.astype(dtype, copy=False), H)

    return evaluate_predictor(predict, samples, horizons_ms, frame_rate, model_tag="Last Frame", param_count=0)


def format_report_table(reports: Sequence[EvalReport]) -> str:
    """Side-by-side table: one row per report, one column per horizon (ms)."""
    if not reports:
        return "(no reports)"
    horizons = reports[0].horizons_ms
    rows = {}
    for report in reports:
        if report.horizons_ms != horizons:
            raise ConfigurationError("Reports in one table must share the same horizons")
        row = {"params (M)": f"{report.param_count / 1e6:.3f}"}
        row.update({str(h): f"{v:.1f}" for h, v in zip(report.horizons_ms, report.mpjpe_mm)})
        rows[report.model_tag] = row
    frame = pd.DataFrame.from_dict(rows, orient="index")
    frame.index.name = "MPJPE (mm)"
    return frame.to_string()
