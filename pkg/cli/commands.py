"""
Command handlers for the motion forecasting CLI.

Every handler takes the validated ExperimentConfig plus the parsed
arguments, writes its artifacts through RunStorage and returns an exit code.
"""
import logging
from pathlib import Path
from typing import List, Sequence

import numpy as np

from config import ConfigurationError, ExperimentConfig
from motion_engine import (
    EvalReport,
    MotionSequence,
    build_dct_basis,
    center_on_root,
    default_registry,
    evaluate,
    evaluate_last_frame,
    evaluation_windows,
    format_report_table,
    generate_synthetic_corpus,
    get_dtype,
    horizon_frame_indices,
    load_motion,
    one_fc_config,
    param_count,
    rollout,
    subsample,
    train,
    write_motion,
)
from motion_engine.errors import InputError, ShapeError
from motion_engine.gradcheck import DEFAULT_SEEDS, DEFAULT_TOLERANCE, results_frame
from motion_engine.preprocess import windows_from_sequences
from storage import RunStorage, load_checkpoint, save_checkpoint

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 3


# ==================== Data helpers ====================

def load_sequences(paths: Sequence[str], cfg: ExperimentConfig) -> List[MotionSequence]:
    """Load motion files and apply subsampling and root centering from the run settings."""
    sequences = []
    for path in paths:
        seq = load_motion(path, frame_rate=cfg.run.frame_rate)
        seq = subsample(seq, cfg.run.subsample_stride)
        if cfg.run.root_joint >= 0:
            seq = center_on_root(seq, cfg.run.root_joint)
        sequences.append(seq)
    return sequences


def training_sequences(cfg: ExperimentConfig) -> List[MotionSequence]:
    if cfg.run.use_synthetic:
        return generate_synthetic_corpus(cfg.synthetic, cfg.synthetic.num_sequences, offset=0)
    if cfg.run.train_paths:
        return load_sequences(cfg.run.train_paths, cfg)
    raise ConfigurationError("No training data: pass --data PATH or --synthetic")


def evaluation_sequences(cfg: ExperimentConfig) -> List[MotionSequence]:
    if cfg.run.test_paths:
        return load_sequences(cfg.run.test_paths, cfg)
    if cfg.run.use_synthetic:
        # Children after the training ones, so test motion is never trained on.
        return generate_synthetic_corpus(
            cfg.synthetic, cfg.synthetic.num_test_sequences, offset=cfg.synthetic.num_sequences
        )
    raise ConfigurationError("No test data: pass --test-data PATH or --synthetic")


def _input_files(cfg: ExperimentConfig) -> List[Path]:
    return [Path(p) for p in list(cfg.run.train_paths) + list(cfg.run.test_paths)]


def _common_frame_rate(sequences: Sequence[MotionSequence]) -> float:
    rates = sorted({seq.frame_rate for seq in sequences})
    if len(rates) != 1:
        raise ConfigurationError(f"Test sequences mix frame rates {rates}; subsample them to one rate")
    return rates[0]


def _data_channels(sequences: Sequence[MotionSequence]) -> int:
    channels = {seq.channels for seq in sequences}
    if len(channels) != 1:
        raise ShapeError(f"Sequences disagree on joint count: channels {sorted(channels)}")
    (data_channels,) = channels
    return data_channels


def _match_channels(cfg: ExperimentConfig, sequences: Sequence[MotionSequence]) -> None:
    """The model's channel count follows the data."""
    data_channels = _data_channels(sequences)
    if data_channels != cfg.model.channels:
        logger.info(f"[CLI] Setting model channels to {data_channels} to match the data")
        cfg.model.channels = data_channels


def _load_one_fc(path: str):
    """Load a checkpoint that must hold a One-FC model (num_blocks = 0)."""
    model, params = load_checkpoint(path)
    if not model.is_one_fc:
        raise ConfigurationError(
            f"--one-fc-checkpoint {path} holds a {model.num_blocks}-block model, not a One-FC baseline"
        )
    return model, params


def _test_windows(cfg: ExperimentConfig, input_len: int, output_len: int, sequences: Sequence[MotionSequence]):
    frame_rate = _common_frame_rate(sequences)
    indices = horizon_frame_indices(cfg.run.horizons_ms, frame_rate)
    stride = cfg.run.eval_stride or (input_len + output_len)
    samples = evaluation_windows(sequences, input_len, max(indices) + 1, stride)
    if not samples:
        raise ConfigurationError(
            f"Test sequences are too short: need at least {input_len + max(indices) + 1} frames"
        )
    return samples, frame_rate


def _save_reports(storage: RunStorage, reports: Sequence[EvalReport]) -> None:
    for report in reports:
        storage.save_report(report.to_frame(), report.model_tag)
    print(format_report_table(reports))


# ==================== Commands ====================

def cmd_train(cfg: ExperimentConfig, args) -> int:
    """Train a model and write its checkpoint and loss trace."""
    sequences = training_sequences(cfg)
    _match_channels(cfg, sequences)
    cfg.validate()
    model = cfg.model

    samples = windows_from_sequences(sequences, model.input_len, model.output_len, cfg.run.window_stride)
    if not samples:
        raise ConfigurationError(
            f"Training sequences are too short for {model.input_len}+{model.output_len}-frame windows"
        )

    storage = RunStorage(Path(cfg.run.out_dir))
    count = param_count(model)
    print(f"Parameters: {count:,} ({count / 1e6:.3f}M)")

    result = train(
        model,
        samples,
        cfg.loss,
        cfg.schedule,
        cfg.run.seed,
        batch_size=cfg.run.batch_size,
        log_every=cfg.run.log_every,
        show_progress=cfg.run.show_progress,
    )

    checkpoint_path = Path(cfg.run.checkpoint) if cfg.run.checkpoint else storage.checkpoint_path
    save_checkpoint(model, result.params, checkpoint_path)
    storage.save_dataframe(result.trace, RunStorage.LOSS_TRACE)
    storage.save_run_meta(
        "train",
        cfg.to_dict(),
        _input_files(cfg),
        extra={
            "param_count": count,
            "num_windows": len(samples),
            "initial_loss": result.initial_loss,
            "final_loss": result.final_loss,
        },
    )
    print(f"Final training loss: {result.final_loss:.4f} (initial {result.initial_loss:.4f})")
    print(f"Checkpoint: {checkpoint_path}")
    return EXIT_OK


def cmd_eval(cfg: ExperimentConfig, args) -> int:
    """Evaluate a checkpoint next to the Last-Frame baseline (and One-FC if given)."""
    storage = RunStorage(Path(cfg.run.out_dir))
    checkpoint_path = Path(cfg.run.checkpoint) if cfg.run.checkpoint else storage.checkpoint_path
    model, params = load_checkpoint(checkpoint_path)

    sequences = evaluation_sequences(cfg)
    data_channels = _data_channels(sequences)
    if data_channels != model.channels:
        raise ShapeError(f"Checkpoint expects {model.channels} channels but test data has {data_channels}")
    samples, frame_rate = _test_windows(cfg, model.input_len, model.output_len, sequences)
    dct = build_dct_basis(model.input_len) if model.use_dct else None

    reports = [evaluate(params, model, dct, samples, cfg.run.horizons_ms, frame_rate, model_tag="siMLPe")]
    if cfg.run.one_fc_checkpoint:
        one_fc_model, one_fc_params = _load_one_fc(cfg.run.one_fc_checkpoint)
        one_fc_dct = build_dct_basis(one_fc_model.input_len) if one_fc_model.use_dct else None
        reports.append(
            evaluate(one_fc_params, one_fc_model, one_fc_dct, samples, cfg.run.horizons_ms, frame_rate, model_tag="One FC")
        )
    reports.append(evaluate_last_frame(samples, cfg.run.horizons_ms, frame_rate, dtype=get_dtype()))

    _save_reports(storage, reports)
    storage.save_run_meta(
        "eval",
        cfg.to_dict(),
        [checkpoint_path] + _input_files(cfg),
        extra={"reports": [r.to_dict() for r in reports]},
    )
    return EXIT_OK


def cmd_predict(cfg: ExperimentConfig, args) -> int:
    """Roll a checkpoint forward from the last T frames of a motion file."""
    storage = RunStorage(Path(cfg.run.out_dir))
    checkpoint_path = Path(cfg.run.checkpoint) if cfg.run.checkpoint else storage.checkpoint_path
    model, params = load_checkpoint(checkpoint_path)

    seq = load_motion(args.input, frame_rate=cfg.run.frame_rate)
    if seq.num_frames < model.input_len:
        raise InputError(
            f"Input motion has {seq.num_frames} frames; prediction needs at least {model.input_len}"
        )
    if seq.channels != model.channels:
        raise ShapeError(f"Checkpoint expects {model.channels} channels but input has {seq.channels}")
    if args.horizon < 1:
        raise ConfigurationError(f"--horizon must be >= 1, got {args.horizon}")

    dct = build_dct_basis(model.input_len) if model.use_dct else None
    x = seq.coords[-model.input_len:].astype(get_dtype())
    predicted = rollout(params, model, dct, x, args.horizon)

    output = Path(args.output) if args.output else storage.path("predictions/prediction.motn")
    write_motion(MotionSequence(frame_rate=seq.frame_rate, coords=np.asarray(predicted)), output)
    print(f"Wrote {args.horizon} predicted frames to {output}")
    return EXIT_OK


def cmd_gradcheck(cfg: ExperimentConfig, args) -> int:
    """Finite-difference check of every registered component; exit 3 on any failure."""
    seeds = range(cfg.run.seed, cfg.run.seed + (args.seeds or DEFAULT_SEEDS))
    results = default_registry.run_all(seeds=seeds, tolerance=DEFAULT_TOLERANCE, inject_fault=args.inject_fault)

    frame = results_frame(results)
    print(frame.to_string(index=False, formatters={"max_rel_error": "{:.3e}".format}))
    RunStorage(Path(cfg.run.out_dir)).save_dataframe(frame, RunStorage.GRADCHECK)

    if all(r.passed for r in results):
        print(f"All {len(results)} components pass (tolerance {DEFAULT_TOLERANCE:g})")
        return EXIT_OK
    failed = [r.component for r in results if not r.passed]
    print(f"Gradient check FAILED for: {', '.join(failed)}")
    return EXIT_VERIFICATION_FAILED


def cmd_baseline(cfg: ExperimentConfig, args) -> int:
    """Reports for the Last-Frame and One-FC baselines."""
    storage = RunStorage(Path(cfg.run.out_dir))
    sequences = evaluation_sequences(cfg)
    _match_channels(cfg, sequences)
    cfg.validate()
    model = cfg.model
    samples, frame_rate = _test_windows(cfg, model.input_len, model.output_len, sequences)

    reports = [evaluate_last_frame(samples, cfg.run.horizons_ms, frame_rate, dtype=get_dtype())]

    if cfg.run.one_fc_checkpoint:
        one_fc_model, one_fc_params = _load_one_fc(cfg.run.one_fc_checkpoint)
    else:
        one_fc_model = one_fc_config(model.input_len, model.output_len, model.channels, use_dct=model.use_dct)
        train_seqs = training_sequences(cfg)
        train_samples = windows_from_sequences(
            train_seqs, one_fc_model.input_len, one_fc_model.output_len, cfg.run.window_stride
        )
        logger.info(f"[CLI] Training One-FC inline for {cfg.schedule.total_steps} steps")
        one_fc_params = train(
            one_fc_model,
            train_samples,
            cfg.loss,
            cfg.schedule,
            cfg.run.seed,
            batch_size=cfg.run.batch_size,
            log_every=cfg.run.log_every,
            show_progress=cfg.run.show_progress,
        ).params
        save_checkpoint(one_fc_model, one_fc_params, storage.one_fc_checkpoint_path)

    dct = build_dct_basis(one_fc_model.input_len) if one_fc_model.use_dct else None
    reports.append(
        evaluate(one_fc_params, one_fc_model, dct, samples, cfg.run.horizons_ms, frame_rate, model_tag="One FC")
    )

    _save_reports(storage, reports)
    storage.save_run_meta(
        "baseline",
        cfg.to_dict(),
        _input_files(cfg),
        extra={"reports": [r.to_dict() for r in reports]},
    )
    return EXIT_OK
