"""
Tests for the mini-batch training loop
"""

import numpy as np
import pytest

from config import ConfigurationError, LossWeights, LrSchedule, ModelConfig, SyntheticSpec
from motion_engine.dct import build_dct_basis
from motion_engine.losses import total_loss
from motion_engine.model import forward, init_params, one_fc_config
from motion_engine.motion_io import MotionSequence
from motion_engine.preprocess import WindowBank, make_windows, windows_from_sequences
from motion_engine.report_fields import TRACE_COLUMNS
from motion_engine.synthetic import generate_synthetic_corpus
from motion_engine.trainer import sampler_rng, train


@pytest.fixture
def small_config():
    return ModelConfig(input_len=10, output_len=5, channels=6, num_blocks=2)


@pytest.fixture
def synthetic_samples():
    """Two short sinusoid sequences of two joints, cut into 10+5 windows."""
    spec = SyntheticSpec(num_joints=2, num_frames=80, seed=3)
    return windows_from_sequences(generate_synthetic_corpus(spec, 2), 10, 5, stride=1)


def _schedule(steps, lr=1e-3):
    return LrSchedule(initial_lr=lr, final_lr=lr / 10, drop_step=steps, total_steps=steps)


def _bank_loss(params, config, samples):
    bank = WindowBank.from_samples(samples)
    dct = build_dct_basis(config.input_len)
    prediction, _ = forward(params, config, dct, bank.inputs)
    return total_loss(LossWeights(), prediction.absolute, bank.targets).total


# Test 1: fixed point
def test_static_motion_is_a_fixed_point(small_config):
    """Static data: the zero-initialized model is already exact, so nothing moves."""
    frames = np.tile(np.array([10.0, -5.0, 2.0, 0.0, 1.0, 3.0]), (30, 1))
    samples = make_windows(MotionSequence(frame_rate=25.0, coords=frames), 10, 5, stride=1)

    result = train(small_config, samples, LossWeights(), _schedule(20), seed=0, batch_size=4, log_every=5)

    assert (result.trace["loss_total"] == 0.0).all()
    start = init_params(small_config, 0).named_arrays()
    for name, arr in result.params.named_arrays().items():
        assert np.array_equal(arr, start[name]), name


# Test 2: trace and determinism
def test_trace_columns_and_rows(small_config, synthetic_samples):
    result = train(small_config, synthetic_samples, LossWeights(), _schedule(25), seed=1, batch_size=8, log_every=10)
    assert list(result.trace.columns) == list(TRACE_COLUMNS)
    assert list(result.trace["step"]) == [0, 10, 20, 24]
    assert np.all(np.isfinite(result.trace["loss_total"]))
    assert result.steps == 25


def test_same_seed_same_trajectory(small_config, synthetic_samples):
    a = train(small_config, synthetic_samples, LossWeights(), _schedule(15), seed=7, batch_size=8, log_every=1)
    b = train(small_config, synthetic_samples, LossWeights(), _schedule(15), seed=7, batch_size=8, log_every=1)
    assert a.trace.equals(b.trace)
    for name, arr in a.params.named_arrays().items():
        assert arr.tobytes() == b.params.named_arrays()[name].tobytes()


def test_sampler_stream_differs_from_init_stream():
    init_draws = np.random.Generator(np.random.PCG64(5)).integers(0, 1000, size=8)
    assert not np.array_equal(sampler_rng(5).integers(0, 1000, size=8), init_draws)


def test_window_bank_and_sample_list_agree(small_config, synthetic_samples):
    bank = WindowBank.from_samples(synthetic_samples)
    a = train(small_config, synthetic_samples, LossWeights(), _schedule(5), seed=2, batch_size=4, log_every=1)
    b = train(small_config, bank, LossWeights(), _schedule(5), seed=2, batch_size=4, log_every=1)
    assert a.trace.equals(b.trace)


# Test 3: learning
def test_one_fc_training_reduces_loss(synthetic_samples):
    config = one_fc_config(input_len=10, output_len=5, channels=6)
    before = _bank_loss(init_params(config, 0), config, synthetic_samples)
    schedule = LrSchedule(initial_lr=1e-2, final_lr=1e-3, drop_step=200, total_steps=300)
    result = train(config, synthetic_samples, LossWeights(), schedule, seed=0, batch_size=32, log_every=100)
    after = _bank_loss(result.params, config, synthetic_samples)
    assert after < before


def test_initial_and_final_loss_properties(small_config, synthetic_samples):
    result = train(small_config, synthetic_samples, LossWeights(), _schedule(3), seed=0, batch_size=4, log_every=1)
    assert result.initial_loss == result.trace["loss_total"].iloc[0]
    assert result.final_loss == result.trace["loss_total"].iloc[-1]


# Test 4: bad sources
def test_empty_source_is_a_configuration_error(small_config):
    with pytest.raises(ConfigurationError):
        train(small_config, [], LossWeights(), _schedule(5), seed=0)


def test_window_shape_mismatch_is_a_configuration_error(synthetic_samples):
    wrong = ModelConfig(input_len=10, output_len=5, channels=9, num_blocks=1)
    with pytest.raises(ConfigurationError):
        train(wrong, synthetic_samples, LossWeights(), _schedule(5), seed=0)


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
