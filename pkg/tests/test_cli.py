"""
End-to-end tests for the command-line application

Every command runs through main() on a tiny synthetic task so the whole
suite stays fast; exit codes are checked for each failure family.
"""

import numpy as np
import pandas as pd
import pytest

from app import main
from config import ModelConfig
from motion_engine.model import init_params, one_fc_config
from motion_engine.motion_io import read_motion
from storage.checkpoint import save_checkpoint

TINY = [
    "--set", "num_joints=2",
    "--set", "num_frames=80",
    "--set", "num_sequences=2",
    "--set", "num_test_sequences=2",
    "--set", "input_len=10",
    "--set", "output_len=5",
    "--set", "batch_size=4",
]

TINY_MODEL = ModelConfig(input_len=10, output_len=5, channels=6, num_blocks=1)


@pytest.fixture
def zero_checkpoint(tmp_path):
    """An untrained checkpoint: fc_out is zero, so it predicts the last frame."""
    return save_checkpoint(TINY_MODEL, init_params(TINY_MODEL, 0), tmp_path / "zero.smlp")


@pytest.fixture
def static_csv(tmp_path):
    path = tmp_path / "static.csv"
    rows = ["# two joints, never moving"] + ["10,20,30,-5,0,5"] * 40
    path.write_text("\n".join(rows) + "\n")
    return path


# Test 1: gradcheck
def test_gradcheck_passes(tmp_path):
    out = tmp_path / "gc"
    assert main(["gradcheck", "--seeds", "2", "--out", str(out)]) == 0
    frame = pd.read_csv(out / "gradcheck.csv")
    assert set(frame["component"]) == {"affine", "layernorm", "dct_path", "loss", "one_fc", "full_model"}
    assert frame["passed"].all()


def test_gradcheck_detects_injected_fault(tmp_path):
    out = tmp_path / "gc"
    assert main(["gradcheck", "--seeds", "2", "--inject-fault", "--out", str(out)]) == 3
    frame = pd.read_csv(out / "gradcheck.csv").set_index("component")
    assert not frame.loc["full_model", "passed"]
    assert frame.loc["affine", "passed"]


# Test 2: train
def test_train_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["train", "--synthetic", "--blocks", "1", "--steps", "5", "--out", str(out)] + TINY)
    assert code == 0
    assert (out / "checkpoint.smlp").exists()
    trace = pd.read_csv(out / "loss_trace.csv")
    assert list(trace.columns) == ["step", "lr", "loss_total", "loss_re", "loss_v"]
    assert "Parameters: 214" in capsys.readouterr().out


def test_train_rerun_is_byte_identical(tmp_path):
    out = tmp_path / "run"
    argv = ["train", "--synthetic", "--blocks", "1", "--steps", "5", "--seed", "3", "--out", str(out)] + TINY
    assert main(argv) == 0
    first = {name: (out / name).read_bytes() for name in ("checkpoint.smlp", "loss_trace.csv", "run_meta.json")}
    assert main(argv) == 0
    for name, blob in first.items():
        assert (out / name).read_bytes() == blob, name


def test_train_without_data_is_a_config_error(tmp_path):
    assert main(["train", "--out", str(tmp_path / "run")] + TINY) == 1


def test_unknown_set_key_fails_before_any_output(tmp_path):
    out = tmp_path / "run"
    assert main(["train", "--synthetic", "--set", "num_blokcs=2", "--out", str(out)]) == 1
    assert not out.exists()


# Test 3: eval
def test_zero_checkpoint_matches_last_frame_report(tmp_path, zero_checkpoint):
    out = tmp_path / "eval"
    code = main(["eval", "--synthetic", "--checkpoint", str(zero_checkpoint), "--out", str(out)] + TINY)
    assert code == 0
    model = (out / "reports" / "simlpe.csv").read_bytes()
    assert model == (out / "reports" / "last_frame.csv").read_bytes()
    assert len(pd.read_csv(out / "reports" / "simlpe.csv")) == 8


def test_eval_custom_horizons(tmp_path, zero_checkpoint):
    out = tmp_path / "eval"
    argv = ["eval", "--synthetic", "--horizons", "80,1000", "--checkpoint", str(zero_checkpoint), "--out", str(out)]
    assert main(argv + TINY) == 0
    report = pd.read_csv(out / "reports" / "simlpe.csv")
    assert list(report["horizon_ms"]) == [80, 1000]
    assert list(report["frame_index"]) == [1, 24]


def test_eval_unaligned_horizon_is_a_config_error(tmp_path, zero_checkpoint, capsys):
    argv = ["eval", "--synthetic", "--horizons", "100", "--checkpoint", str(zero_checkpoint), "--out", str(tmp_path)]
    assert main(argv + TINY) == 1
    assert "40" in capsys.readouterr().err


def test_eval_rejects_mixed_joint_counts(tmp_path, zero_checkpoint, static_csv, capsys):
    one_joint = tmp_path / "one_joint.csv"
    one_joint.write_text("\n".join(["1,2,3"] * 40) + "\n")
    argv = [
        "eval", "--test-data", str(static_csv), str(one_joint),
        "--checkpoint", str(zero_checkpoint), "--out", str(tmp_path / "eval"),
    ]
    assert main(argv + TINY) == 1
    assert "joint count" in capsys.readouterr().err
    assert not (tmp_path / "eval" / "reports").exists()


def test_corrupted_checkpoint_is_an_io_error(tmp_path, zero_checkpoint):
    blob = bytearray(zero_checkpoint.read_bytes())
    blob[50] ^= 0xFF
    zero_checkpoint.write_bytes(bytes(blob))
    assert main(["eval", "--synthetic", "--checkpoint", str(zero_checkpoint), "--out", str(tmp_path)] + TINY) == 2


def test_missing_checkpoint_is_an_io_error(tmp_path):
    assert main(["eval", "--synthetic", "--checkpoint", str(tmp_path / "nope.smlp"), "--out", str(tmp_path)] + TINY) == 2


# Test 4: predict
def test_predict_holds_a_static_pose(tmp_path, zero_checkpoint, static_csv):
    output = tmp_path / "future.motn"
    argv = ["predict", "--checkpoint", str(zero_checkpoint), "--input", str(static_csv), "--output", str(output)]
    assert main(argv + ["--out", str(tmp_path)]) == 0
    predicted = read_motion(output)
    assert predicted.num_frames == 25
    assert np.array_equal(predicted.coords, np.tile(np.array([10, 20, 30, -5, 0, 5], dtype=np.float32), (25, 1)))


def test_predict_with_too_few_frames(tmp_path, zero_checkpoint):
    short = tmp_path / "short.csv"
    short.write_text("1,2,3,4,5,6\n" * 5)
    argv = ["predict", "--checkpoint", str(zero_checkpoint), "--input", str(short), "--out", str(tmp_path)]
    assert main(argv) == 1


def test_predict_bad_csv_is_an_io_error(tmp_path, zero_checkpoint):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2,3,4,5,6\n1,2,x,4,5,6\n")
    argv = ["predict", "--checkpoint", str(zero_checkpoint), "--input", str(bad), "--out", str(tmp_path)]
    assert main(argv) == 2


# Test 5: baseline
def test_baseline_on_static_data_is_zero(tmp_path, static_csv):
    one_fc = one_fc_config(input_len=10, output_len=5, channels=6)
    checkpoint = save_checkpoint(one_fc, init_params(one_fc, 0), tmp_path / "one_fc.smlp")
    out = tmp_path / "baseline"
    argv = ["baseline", "--test-data", str(static_csv), "--one-fc-checkpoint", str(checkpoint), "--out", str(out)]
    assert main(argv + TINY) == 0
    for name in ("last_frame.csv", "one_fc.csv"):
        report = pd.read_csv(out / "reports" / name)
        assert (report["mpjpe_mm"] == 0.0).all(), name


def test_baseline_trains_one_fc_inline(tmp_path):
    out = tmp_path / "baseline"
    assert main(["baseline", "--synthetic", "--steps", "5", "--out", str(out)] + TINY) == 0
    assert (out / "one_fc.smlp").exists()
    assert (out / "reports" / "one_fc.csv").exists()


def test_baseline_rejects_a_full_model_as_one_fc(tmp_path, zero_checkpoint, static_csv, capsys):
    out = tmp_path / "baseline"
    argv = ["baseline", "--test-data", str(static_csv), "--one-fc-checkpoint", str(zero_checkpoint), "--out", str(out)]
    assert main(argv + TINY) == 1
    assert "One-FC" in capsys.readouterr().err
    assert not (out / "reports" / "one_fc.csv").exists()


def test_eval_rejects_a_full_model_as_one_fc(tmp_path, zero_checkpoint):
    argv = [
        "eval", "--synthetic", "--checkpoint", str(zero_checkpoint),
        "--one-fc-checkpoint", str(zero_checkpoint), "--out", str(tmp_path / "eval"),
    ]
    assert main(argv + TINY) == 1


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
