"""
Window extraction and light preprocessing of motion sequences.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, List, Sequence

import numpy as np

from .errors import EmptyInputError, InvalidSizeError, ShapeError
from .motion_io import MotionSequence

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainSample:
    """A T-frame input window and the N frames that follow it."""
    input: np.ndarray
    target: np.ndarray
    source_offset: int = 0


def center_on_root(seq: MotionSequence, root_joint_index: int) -> MotionSequence:
    """Subtract the root joint from every joint, frame by frame."""
    if not 0 <= root_joint_index < seq.num_joints:
        raise InvalidSizeError(
            f"Root joint index {root_joint_index} out of range for {seq.num_joints} joints"
        )
    joints = seq.coords.reshape(seq.num_frames, seq.num_joints, 3)
    centered = joints - joints[:, root_joint_index : root_joint_index + 1, :]
    return MotionSequence(frame_rate=seq.frame_rate, coords=centered.reshape(seq.num_frames, -1))


def subsample(seq: MotionSequence, stride: int) -> MotionSequence:
    """Keep every stride-th frame; the frame rate drops by the same factor."""
    if stride < 1:
        raise InvalidSizeError(f"Subsample stride must be >= 1, got {stride}")
    if stride == 1:
        return seq
    return MotionSequence(frame_rate=seq.frame_rate / stride, coords=seq.coords[::stride])


def make_windows(seq: MotionSequence, T: int, N: int, stride: int) -> List[TrainSample]:
    """
    Slide a (T + N)-frame window over the sequence.

    Windows start at 0, stride, 2*stride, ...; sequences shorter than T + N
    give an empty list.
    """
    if stride < 1:
        raise InvalidSizeError(f"Window stride must be >= 1, got {stride}")
    span = T + N
    if seq.num_frames < span:
        return []
    count = (seq.num_frames - span) // stride + 1
    samples = []
    for k in range(count):
        start = k * stride
        samples.append(
            TrainSample(
                input=seq.coords[start : start + T],
                target=seq.coords[start + T : start + span],
                source_offset=start,
            )
        )
    return samples


def windows_from_sequences(sequences: Iterable[MotionSequence], T: int, N: int, stride: int) -> List[TrainSample]:
    samples: List[TrainSample] = []
    for seq in sequences:
        samples.extend(make_windows(seq, T, N, stride))
    return samples


@dataclass(frozen=True)
class WindowBank:
    """TrainSamples stacked into contiguous (M, T, C) inputs and (M, N, C) targets."""
    inputs: np.ndarray
    targets: np.ndarray

    @classmethod
    def from_samples(cls, samples: Sequence[TrainSample], dtype=np.float32) -> "WindowBank":
        if not samples:
            raise EmptyInputError("No training windows to stack")
        input_shape, target_shape = samples[0].input.shape, samples[0].target.shape
        for s in samples:
            if s.input.shape != input_shape or s.target.shape != target_shape:
                raise ShapeError(
                    f"Window shapes differ: {s.input.shape}/{s.target.shape} vs {input_shape}/{target_shape}"
                )
        inputs = np.stack([s.input for s in samples]).astype(dtype)
        targets = np.stack([s.target for s in samples]).astype(dtype)
        inputs.flags.writeable = False
        targets.flags.writeable = False
        return cls(inputs=inputs, targets=targets)

    def __len__(self) -> int:
        return self.inputs.shape[0]
