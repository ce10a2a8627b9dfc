"""
Sum-of-sinusoids motion for desk-scale experiments.

Every coordinate is `harmonics` sinusoids with random frequency, phase and
amplitude plus a linear drift. All draws come from a PCG64 stream seeded by
SyntheticSpec.seed, so a seed always reproduces the same sequence.
"""
from __future__ import annotations

import logging
from typing import List, Tuple

import numpy as np

from config import SyntheticSpec
from .motion_io import MotionSequence

logger = logging.getLogger(__name__)


def _generate(spec: SyntheticSpec, rng: np.random.Generator) -> MotionSequence:
    C = 3 * spec.num_joints
    t = np.arange(spec.num_frames, dtype=np.float64)[:, None] / spec.frame_rate
    frame_index = np.arange(spec.num_frames, dtype=np.float64)[:, None]

    coords = np.zeros((spec.num_frames, C), dtype=np.float64)
    for _ in range(spec.harmonics):
        freq = rng.uniform(spec.freq_min, spec.freq_max, size=C)
        phase = rng.uniform(0.0, 2.0 * np.pi, size=C)
        amp = rng.uniform(spec.amp_min, spec.amp_max, size=C)
        coords += amp * np.sin(2.0 * np.pi * freq * t + phase)
    drift = rng.uniform(spec.drift_min, spec.drift_max, size=C)
    coords += drift * frame_index
    return MotionSequence(frame_rate=spec.frame_rate, coords=coords)


def generate_synthetic(spec: SyntheticSpec) -> MotionSequence:
    spec.validate()
    return _generate(spec, np.random.Generator(np.random.PCG64(spec.seed)))


def generate_synthetic_corpus(spec: SyntheticSpec, count: int, offset: int = 0) -> List[MotionSequence]:
    """
    `count` independent sequences from child seeds offset..offset+count-1 of
    `spec.seed`. Disjoint offsets never share a stream.
    """
    spec.validate()
    children = np.random.SeedSequence(spec.seed).spawn(offset + count)[offset:]
    corpus = [_generate(spec, np.random.Generator(np.random.PCG64(child))) for child in children]
    logger.info(
        f"[SYNTHETIC] Generated {count} sequences of {spec.num_frames} frames x {spec.num_joints} joints "
        f"(seed={spec.seed}, offset={offset})"
    )
    return corpus


def train_test_corpora(spec: SyntheticSpec) -> Tuple[List[MotionSequence], List[MotionSequence]]:
    """Training sequences first, then the test sequences from the following children."""
    train = generate_synthetic_corpus(spec, spec.num_sequences, offset=0)
    test = generate_synthetic_corpus(spec, spec.num_test_sequences, offset=spec.num_sequences)
    return train, test
