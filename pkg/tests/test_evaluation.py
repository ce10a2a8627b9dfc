"""
Tests for horizon mapping, rollout and MPJPE reports
"""

import numpy as np
import pytest

import motion_engine.evaluation as evaluation
from config import ConfigurationError, ModelConfig, SyntheticSpec
from motion_engine.dct import build_dct_basis
from motion_engine.errors import InvalidSizeError, ShapeError
from motion_engine.evaluation import (
    EvalReport,
    evaluate,
    evaluate_last_frame,
    evaluation_windows,
    format_report_table,
    horizon_frame_indices,
    mpjpe,
    rollout,
)
from motion_engine.model import init_params
from motion_engine.motion_io import MotionSequence
from motion_engine.synthetic import generate_synthetic_corpus
from motion_engine.tensor_core import precision


@pytest.fixture
def small_config():
    return ModelConfig(input_len=50, output_len=10, channels=66, num_blocks=2)


@pytest.fixture(scope="module")
def synthetic_test_set():
    """50 synthetic sequences of 22 joints cut into non-overlapping 50+25 windows."""
    spec = SyntheticSpec(num_joints=22, num_frames=200, seed=21)
    return evaluation_windows(generate_synthetic_corpus(spec, 50), 50, 25, stride=75)


# Test 1: horizon mapping
def test_horizon_indices_at_25_fps():
    assert horizon_frame_indices([80, 160, 320, 400, 560, 720, 880, 1000], 25.0) == [1, 3, 7, 9, 13, 17, 21, 24]


def test_horizon_indices_at_50_fps():
    assert horizon_frame_indices([80, 1000], 50.0) == [3, 49]


def test_unaligned_horizon_lists_valid_values():
    with pytest.raises(ConfigurationError, match="40"):
        horizon_frame_indices([100], 25.0)
    with pytest.raises(ConfigurationError):
        horizon_frame_indices([0], 25.0)
    with pytest.raises(ConfigurationError):
        horizon_frame_indices([], 25.0)


# Test 2: MPJPE
def test_mpjpe_hand_examples():
    assert mpjpe(np.array([[3.0, 4.0, 0.0]]), np.zeros((1, 3)), 0) == pytest.approx(5.0)
    pred = np.array([[0.0, 0.0, 0.0, 3.0, 4.0, 0.0]])
    assert mpjpe(pred, np.zeros((1, 6)), 0) == pytest.approx(2.5)


def test_mpjpe_uses_only_the_requested_frame():
    pred = np.zeros((3, 3))
    pred[2] = [0.0, 0.0, 7.0]
    assert mpjpe(pred, np.zeros((3, 3)), 1) == 0.0
    assert mpjpe(pred, np.zeros((3, 3)), 2) == pytest.approx(7.0)


def test_mpjpe_symmetric_and_translation_invariant():
    rng = np.random.Generator(np.random.PCG64(5))
    a, b = rng.normal(size=(4, 12)), rng.normal(size=(4, 12))
    shift = np.tile(rng.normal(size=3), 4)
    assert mpjpe(a, b, 2) == pytest.approx(mpjpe(b, a, 2))
    assert mpjpe(a + shift, b + shift, 2) == pytest.approx(mpjpe(a, b, 2))


def test_mpjpe_frame_out_of_range():
    with pytest.raises(InvalidSizeError):
        mpjpe(np.zeros((3, 3)), np.zeros((3, 3)), 3)


# Test 3: rollout
@pytest.mark.parametrize("H,calls", [(5, 1), (10, 1), (11, 2), (25, 3)])
def test_rollout_makes_ceil_h_over_n_passes(monkeypatch, small_config, H, calls):
    count = {"n": 0}
    real_forward = evaluation.forward

    def counting_forward(*args, **kwargs):
        count["n"] += 1
        return real_forward(*args, **kwargs)

    monkeypatch.setattr(evaluation, "forward", counting_forward)
    x = np.zeros((50, 66), dtype=np.float32)
    out = rollout(init_params(small_config, 0), small_config, build_dct_basis(50), x, H)
    assert out.shape == (H, 66)
    assert count["n"] == calls


def test_zero_init_rollout_holds_the_last_frame(small_config):
    x = np.random.Generator(np.random.PCG64(1)).normal(size=(2, 50, 66)).astype(np.float32)
    out = rollout(init_params(small_config, 0), small_config, build_dct_basis(50), x, 25)
    assert np.array_equal(out, np.repeat(x[:, -1:, :], 25, axis=1))


def test_rollout_rejects_non_positive_horizon(small_config):
    with pytest.raises(InvalidSizeError):
        rollout(init_params(small_config, 0), small_config, build_dct_basis(50), np.zeros((50, 66)), 0)


# Test 4: reports
@pytest.mark.parametrize("mode", ["f32", "f64"])
def test_zero_init_model_matches_last_frame_exactly(small_config, synthetic_test_set, mode):
    with precision(mode):
        params = init_params(small_config, 0)
        dtype = next(iter(params.named_arrays().values())).dtype
        model_report = evaluate(params, small_config, build_dct_basis(50), synthetic_test_set)
        baseline = evaluate_last_frame(synthetic_test_set, dtype=dtype)
    assert model_report.mpjpe_mm == baseline.mpjpe_mm
    assert model_report.num_samples == baseline.num_samples == 100
    assert baseline.model_tag == "Last Frame"


def test_static_ground_truth_gives_zero_error():
    seq = MotionSequence(frame_rate=25.0, coords=np.tile(np.arange(6, dtype=np.float64), (150, 1)))
    samples = evaluation_windows([seq], 50, 25, stride=75)
    report = evaluate_last_frame(samples, [80, 1000])
    assert report.mpjpe_mm == [0.0, 0.0]
    assert report.frame_indices == [1, 24]


def test_last_frame_error_grows_on_a_ramp():
    """A joint moving 1 mm per frame: the error at frame index k is k + 1."""
    coords = np.zeros((75, 3))
    coords[:, 0] = np.arange(75)
    samples = evaluation_windows([MotionSequence(25.0, coords)], 50, 25, stride=75)
    report = evaluate_last_frame(samples, [80, 400, 1000])
    assert report.mpjpe_mm == pytest.approx([2.0, 10.0, 25.0])


def test_short_targets_raise():
    seq = MotionSequence(frame_rate=25.0, coords=np.zeros((60, 3)))
    samples = evaluation_windows([seq], 50, 10, stride=60)
    with pytest.raises(ShapeError):
        evaluate_last_frame(samples, [1000])


def test_no_windows_raise():
    with pytest.raises(ConfigurationError):
        evaluate_last_frame([], [80])


def test_report_frame_and_table():
    report = EvalReport(horizons_ms=[80, 1000], frame_indices=[1, 24], mpjpe_mm=[9.6, 109.4], num_samples=3, param_count=136_044, model_tag="siMLPe")
    frame = report.to_frame()
    assert list(frame.columns) == ["horizon_ms", "frame_index", "mpjpe_mm"]
    assert len(frame) == 2
    assert frame["frame_index"].tolist() == [1, 24]
    assert report.at(1000) == 109.4

    baseline = EvalReport(horizons_ms=[80, 1000], frame_indices=[1, 24], mpjpe_mm=[23.8, 130.5], num_samples=3, model_tag="Last Frame")
    table = format_report_table([report, baseline])
    assert "siMLPe" in table and "Last Frame" in table
    assert "0.136" in table and "109.4" in table


def test_table_rejects_mixed_horizons():
    a = EvalReport(horizons_ms=[80], frame_indices=[1], mpjpe_mm=[1.0], num_samples=1)
    b = EvalReport(horizons_ms=[160], frame_indices=[3], mpjpe_mm=[1.0], num_samples=1)
    with pytest.raises(ConfigurationError):
        format_report_table([a, b])


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
