"""
Application factory for the motion forecasting CLI.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

try:
    from dotenv import load_dotenv
    # Workspace .env supplies MOTION_* defaults for local runs.
    load_dotenv()
except Exception:
    pass

from config import ConfigurationError, ExperimentConfig, load_experiment_config
from motion_engine.errors import FileFormatError, MotionParseError
from motion_engine.gradcheck import default_registry
from motion_engine.tensor_core import precision

logger = logging.getLogger(__name__)

EXIT_CONFIG_ERROR = 1
EXIT_IO_ERROR = 2


def configure_logging(verbose: bool = False) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )


def _shared_options() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", type=Path, help="key=value config file")
    shared.add_argument("--seed", type=int, help="run seed (unsigned 64-bit)")
    shared.add_argument("--precision", choices=["f32", "f64"], help="floating point precision")
    shared.add_argument("--out", help="output directory for run artifacts")
    shared.add_argument("--task", help="named task preset, e.g. synthetic (desk-scale sinusoid task)")
    shared.add_argument(
        "--set", dest="set_pairs", action="append", default=[], metavar="KEY=VALUE",
        help="override any config key (repeatable)",
    )
    shared.add_argument("--progress", action="store_true", help="show a progress bar while training")
    shared.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    return shared


def _data_options(parser: argparse.ArgumentParser, train_data: bool = True) -> None:
    parser.add_argument("--synthetic", action="store_true", help="use the seeded synthetic corpus")
    if train_data:
        parser.add_argument("--data", nargs="+", help="training motion files (.motn or .csv)")
    parser.add_argument("--test-data", nargs="+", help="test motion files (.motn or .csv)")
    parser.add_argument("--horizons", help="comma-separated horizons in ms, e.g. 80,1000")


def create_app() -> argparse.ArgumentParser:
    """
    Build the command-line parser.

    Each subcommand carries its handler in `handler`, the way blueprints are
    registered on an application.
    """
    from cli import commands

    shared = _shared_options()
    parser = argparse.ArgumentParser(
        prog="motion-forecast",
        description="DCT + all-MLP human motion forecasting",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", parents=[shared], help="train a model")
    _data_options(train)
    train.add_argument("--blocks", type=int, help="number of MLP blocks (0 selects One-FC)")
    train.add_argument("--steps", type=int, help="total optimizer steps")
    train.add_argument("--batch-size", type=int, help="windows per step")
    train.add_argument("--schedule", help="named schedule preset (h36m, amass)")
    train.add_argument("--checkpoint", help="checkpoint output path")
    train.add_argument("--w-v", type=float, help="velocity loss weight")
    train.add_argument("--no-transpose", action="store_true", help="ablation: blocks act along channels")
    train.add_argument("--no-layernorm", action="store_true", help="ablation: drop LayerNorm")
    train.add_argument("--no-dct", action="store_true", help="ablation: skip the DCT")
    train.set_defaults(handler=commands.cmd_train)

    evaluate = sub.add_parser("eval", parents=[shared], help="evaluate a checkpoint")
    _data_options(evaluate, train_data=False)
    evaluate.add_argument("--checkpoint", help="checkpoint to evaluate")
    evaluate.add_argument("--one-fc-checkpoint", help="trained One-FC checkpoint to report alongside")
    evaluate.set_defaults(handler=commands.cmd_eval)

    predict = sub.add_parser("predict", parents=[shared], help="predict future frames from a motion file")
    predict.add_argument("--checkpoint", help="checkpoint to use")
    predict.add_argument("--input", required=True, help="input motion file; its last T frames are used")
    predict.add_argument("--horizon", type=int, default=25, help="frames to predict")
    predict.add_argument("--output", help="output motion file")
    predict.set_defaults(handler=commands.cmd_predict)

    baseline = sub.add_parser("baseline", parents=[shared], help="Last-Frame and One-FC reports")
    _data_options(baseline)
    baseline.add_argument("--one-fc-checkpoint", help="use this One-FC checkpoint instead of training one")
    baseline.add_argument("--steps", type=int, help="One-FC training steps")
    baseline.set_defaults(handler=commands.cmd_baseline)

    gradcheck = sub.add_parser("gradcheck", parents=[shared], help="finite-difference gradient checks")
    gradcheck.add_argument(
        "--inject-fault", nargs="?", const="full_model", default=None,
        choices=[c.name for c in default_registry.get_all_checks()],
        help="double one component's analytic gradient (test hook)",
    )
    gradcheck.add_argument("--seeds", type=int, help="random instances per component")
    gradcheck.set_defaults(handler=commands.cmd_gradcheck)

    return parser


def _parse_set_pairs(pairs: List[str]) -> Dict[str, str]:
    parsed = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigurationError(f"--set expects KEY=VALUE, got '{pair}'")
        key, value = pair.split("=", 1)
        parsed[key.strip()] = value.strip()
    return parsed


def overrides_from_args(args: argparse.Namespace) -> Dict[str, str]:
    """--set pairs first, then dedicated flags, which win."""
    overrides = _parse_set_pairs(args.set_pairs)
    flag_keys = {
        "seed": "seed",
        "precision": "precision",
        "out": "out_dir",
        "task": "task_preset",
        "blocks": "num_blocks",
        "steps": "total_steps",
        "batch_size": "batch_size",
        "schedule": "schedule_preset",
        "checkpoint": "checkpoint",
        "one_fc_checkpoint": "one_fc_checkpoint",
        "horizons": "horizons_ms",
        "w_v": "w_v",
    }
    for attr, key in flag_keys.items():
        value = getattr(args, attr, None)
        if value is not None:
            overrides[key] = str(value)
    if getattr(args, "data", None):
        overrides["train_paths"] = ",".join(args.data)
    if getattr(args, "test_data", None):
        overrides["test_paths"] = ",".join(args.test_data)
    for attr, key in (("synthetic", "use_synthetic"), ("progress", "show_progress")):
        if getattr(args, attr, False):
            overrides[key] = "true"
    for attr, key in (("no_transpose", "use_transpose"), ("no_layernorm", "use_layernorm"), ("no_dct", "use_dct")):
        if getattr(args, attr, False):
            overrides[key] = "false"
    return overrides


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    return load_experiment_config(args.config, overrides_from_args(args))


def main(argv: Optional[List[str]] = None) -> int:
    parser = create_app()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)

    try:
        cfg = build_config(args)
        logger.info(f"[CLI] {args.command}: seed={cfg.run.seed} precision={cfg.run.precision} out={cfg.run.out_dir}")
        with precision(cfg.run.precision):
            return args.handler(cfg, args)
    except (FileFormatError, MotionParseError, OSError) as e:
        logger.error(f"[CLI] I/O error: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO_ERROR
    except ValueError as e:
        logger.error(f"[CLI] Configuration error: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
