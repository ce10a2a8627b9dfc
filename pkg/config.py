"""
Centralized configuration for motion forecasting runs.
Model shape, loss weights, learning-rate schedule, synthetic data and run
settings are all defined here.
"""
from dataclasses import dataclass, field, fields, asdict
from functools import lru_cache
from typing import Any, Dict, List, Optional, Tuple, get_type_hints
from pathlib import Path
import json
import logging
import os

logger = logging.getLogger(__name__)


class ConfigurationError(ValueError):
    """Run configuration is invalid or incomplete."""


DEFAULT_HORIZONS_MS = [80, 160, 320, 400, 560, 720, 880, 1000]


@dataclass
class ModelConfig:
    """Network shape and the architecture ablation toggles."""
    input_len: int = 50
    output_len: int = 10
    channels: int = 66
    num_blocks: int = 48  # 0 selects the One-FC baseline
    use_transpose: bool = True
    use_layernorm: bool = True
    use_dct: bool = True

    @property
    def is_one_fc(self) -> bool:
        return self.num_blocks == 0

    @property
    def num_joints(self) -> int:
        return self.channels // 3

    @property
    def temporal(self) -> bool:
        """Whether the inner layers act along the temporal axis."""
        return self.use_transpose or self.is_one_fc

    @property
    def block_dim(self) -> int:
        return self.input_len if self.temporal else self.channels

    def validate(self) -> None:
        if self.input_len < 1:
            raise ConfigurationError(f"input_len must be >= 1, got {self.input_len}")
        if not 1 <= self.output_len <= self.input_len:
            raise ConfigurationError(
                f"output_len must be in [1, input_len={self.input_len}], got {self.output_len}"
            )
        if self.channels < 3 or self.channels % 3 != 0:
            raise ConfigurationError(f"channels must be a positive multiple of 3, got {self.channels}")
        if self.num_blocks < 0:
            raise ConfigurationError(f"num_blocks must be >= 0, got {self.num_blocks}")


@dataclass
class LossWeights:
    """Weights of the position and velocity terms."""
    w_re: float = 1.0
    w_v: float = 1.0

    def validate(self) -> None:
        for name in ("w_re", "w_v"):
            value = getattr(self, name)
            if not (value >= 0 and value != float("inf")):
                raise ConfigurationError(f"{name} must be finite and >= 0, got {value}")


@dataclass
class LrSchedule:
    """Step decay: initial_lr until drop_step, final_lr afterwards."""
    initial_lr: float = 3e-4
    final_lr: float = 1e-5
    drop_step: int = 30_000
    total_steps: int = 35_000

    def validate(self) -> None:
        if self.total_steps < 1:
            raise ConfigurationError(f"total_steps must be >= 1, got {self.total_steps}")
        if self.drop_step < 0:
            raise ConfigurationError(f"drop_step must be >= 0, got {self.drop_step}")
        if self.initial_lr <= 0 or self.final_lr <= 0:
            raise ConfigurationError("Learning rates must be positive")


@dataclass
class SyntheticSpec:
    """Sum-of-sinusoids motion used for desk-scale experiments (millimeters)."""
    num_joints: int = 22
    num_frames: int = 500
    harmonics: int = 3
    freq_min: float = 0.2
    freq_max: float = 1.0
    amp_min: float = 20.0
    amp_max: float = 200.0
    # Drift in mm per frame; the range is signed.
    drift_min: float = -0.5
    drift_max: float = 0.5
    frame_rate: float = 25.0
    seed: int = 0
    num_sequences: int = 20
    num_test_sequences: int = 50

    def validate(self) -> None:
        if self.num_joints < 1 or self.num_frames < 1 or self.harmonics < 0:
            raise ConfigurationError("Synthetic num_joints/num_frames must be >= 1 and harmonics >= 0")
        for low, high in (("freq_min", "freq_max"), ("amp_min", "amp_max"), ("drift_min", "drift_max")):
            if getattr(self, low) > getattr(self, high):
                raise ConfigurationError(f"Synthetic range {low}..{high} is empty")
        if self.frame_rate <= 0:
            raise ConfigurationError(f"Synthetic frame_rate must be positive, got {self.frame_rate}")


@dataclass
class RunSettings:
    """Paths, seed and run-level switches."""
    seed: int = field(default_factory=lambda: int(os.getenv('MOTION_SEED', '0')))
    precision: str = field(default_factory=lambda: os.getenv('MOTION_PRECISION', 'f32'))
    out_dir: str = field(default_factory=lambda: os.getenv('MOTION_OUT_DIR', 'instance/runs/latest'))
    checkpoint: str = ""
    one_fc_checkpoint: str = ""
    train_paths: List[str] = field(default_factory=list)
    test_paths: List[str] = field(default_factory=list)
    use_synthetic: bool = False
    frame_rate: float = 25.0  # for CSV imports
    root_joint: int = -1  # -1 keeps global translation
    subsample_stride: int = 1
    window_stride: int = 1
    eval_stride: int = 0  # 0 means input_len + output_len
    batch_size: int = 256
    log_every: int = 100
    horizons_ms: List[int] = field(default_factory=lambda: list(DEFAULT_HORIZONS_MS))
    schedule_preset: str = ""
    task_preset: str = ""  # named block of keys under "tasks" in the presets file
    show_progress: bool = False

    def validate(self) -> None:
        if self.precision not in ("f32", "f64"):
            raise ConfigurationError(f"precision must be f32 or f64, got '{self.precision}'")
        if self.batch_size < 1 or self.log_every < 1:
            raise ConfigurationError("batch_size and log_every must be >= 1")
        if self.subsample_stride < 1 or self.window_stride < 1 or self.eval_stride < 0:
            raise ConfigurationError("Strides must be >= 1 (eval_stride >= 0)")
        if not self.horizons_ms:
            raise ConfigurationError("horizons_ms must list at least one horizon")

    def has_training_data(self) -> bool:
        return self.use_synthetic or bool(self.train_paths)


SECTIONS = ("run", "model", "loss", "schedule", "synthetic")
_PRESET_KEYS = ("task_preset", "schedule_preset")


@dataclass
class ExperimentConfig:
    """Main run configuration container."""
    run: RunSettings = field(default_factory=RunSettings)
    model: ModelConfig = field(default_factory=ModelConfig)
    loss: LossWeights = field(default_factory=LossWeights)
    schedule: LrSchedule = field(default_factory=LrSchedule)
    synthetic: SyntheticSpec = field(default_factory=SyntheticSpec)

    def validate(self) -> None:
        for section in SECTIONS:
            getattr(self, section).validate()

    def set_value(self, key: str, raw: Any) -> None:
        """Set one flat key (e.g. 'num_blocks', 'synthetic_seed') from a raw value."""
        table = config_keys()
        if key not in table:
            raise ConfigurationError(f"Unknown config key '{key}'")
        section, name = table[key]
        target = getattr(self, section)
        hint = get_type_hints(type(target))[name]
        setattr(target, name, _convert(key, raw, hint))

    def apply(self, pairs: Dict[str, Any]) -> "ExperimentConfig":
        """Apply several keys; every key is checked before anything changes."""
        unknown = sorted(k for k in pairs if k not in config_keys())
        if unknown:
            raise ConfigurationError(f"Unknown config keys: {unknown}. Valid keys: {sorted(config_keys())}")
        if "task_preset" in pairs:
            self.set_value("task_preset", pairs["task_preset"])
            apply_task_preset(self, self.run.task_preset)
        if "schedule_preset" in pairs:
            self.set_value("schedule_preset", pairs["schedule_preset"])
            apply_schedule_preset(self, self.run.schedule_preset)
        for key, raw in pairs.items():
            if key not in _PRESET_KEYS:
                self.set_value(key, raw)
        return self

    def to_flat_dict(self) -> Dict[str, Any]:
        flat = {}
        for key, (section, name) in config_keys().items():
            flat[key] = getattr(getattr(self, section), name)
        return flat

    def to_dict(self) -> Dict[str, Any]:
        return {section: asdict(getattr(self, section)) for section in SECTIONS}


_SECTION_TYPES = {
    "run": RunSettings,
    "model": ModelConfig,
    "loss": LossWeights,
    "schedule": LrSchedule,
    "synthetic": SyntheticSpec,
}


@lru_cache(maxsize=1)
def _key_table() -> Tuple[Tuple[str, Tuple[str, str]], ...]:
    table: Dict[str, Tuple[str, str]] = {}
    for section in SECTIONS:
        for f in fields(_SECTION_TYPES[section]):
            key = f.name if f.name not in table else f"{section}_{f.name}"
            table[key] = (section, f.name)
    return tuple(table.items())


def config_keys() -> Dict[str, Tuple[str, str]]:
    """Flat key -> (section, field). Collisions get a section prefix (synthetic_seed)."""
    return dict(_key_table())


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _convert(key: str, raw: Any, hint: Any) -> Any:
    if not isinstance(raw, str):
        return list(raw) if hint in (List[str], List[int]) else hint(raw)
    text = raw.strip()
    try:
        if hint is bool:
            lowered = text.lower()
            if lowered in _TRUE:
                return True
            if lowered in _FALSE:
                return False
            raise ValueError(text)
        if hint is int:
            return int(text.replace("_", ""))
        if hint is float:
            return float(text)
        if hint == List[int]:
            return [int(part) for part in text.split(",") if part.strip()]
        if hint == List[str]:
            return [part.strip() for part in text.split(",") if part.strip()]
        return text
    except ValueError:
        raise ConfigurationError(f"Invalid value '{raw}' for config key '{key}'")


def parse_config_file(path: Path) -> Dict[str, str]:
    """
    Parse a key=value file. '#' starts a comment; blank lines are ignored.

    Raises:
        ConfigurationError: on malformed lines or repeated keys
    """
    pairs: Dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8-sig")
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigurationError(f"{path}:{line_no}: expected key=value, got '{line.strip()}'")
        key, value = stripped.split("=", 1)
        key = key.strip()
        if key in pairs:
            raise ConfigurationError(f"{path}:{line_no}: key '{key}' set twice")
        pairs[key] = value.strip()
    return pairs


def _presets_path() -> Path:
    configured = os.getenv("MOTION_PRESETS_PATH")
    if configured:
        return Path(configured)
    return Path(__file__).resolve().parent / "experiment_presets.json"


@lru_cache(maxsize=1)
def load_presets() -> Dict[str, Any]:
    """Load experiment presets, falling back to the built-in schedules."""
    path = _presets_path()
    if not path.exists():
        logger.warning(f"[CONFIG] Presets file not found at {path}, using defaults")
        return {"schedules": {"h36m": asdict(LrSchedule())}}
    with open(path, "r", encoding="utf-8") as f:
        presets = json.load(f)
    logger.info(f"[CONFIG] Loaded presets from {path}")
    return presets


def apply_schedule_preset(cfg: ExperimentConfig, name: str) -> None:
    if not name:
        return
    schedules = load_presets().get("schedules", {})
    if name not in schedules:
        raise ConfigurationError(f"Unknown schedule preset '{name}'. Valid presets: {sorted(schedules)}")
    for key, value in schedules[name].items():
        setattr(cfg.schedule, key, value)


def apply_task_preset(cfg: ExperimentConfig, name: str) -> None:
    """Apply a named block of flat keys; keys given alongside the preset still win."""
    if not name:
        return
    tasks = load_presets().get("tasks", {})
    if name not in tasks:
        raise ConfigurationError(f"Unknown task preset '{name}'. Valid presets: {sorted(tasks)}")
    for key, value in tasks[name].items():
        if key in _PRESET_KEYS:
            raise ConfigurationError(f"Task preset '{name}' may not set '{key}'")
        cfg.set_value(key, value)


def load_experiment_config(
    path: Optional[Path] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> ExperimentConfig:
    """
    Build a validated ExperimentConfig.

    File values and overrides are merged (overrides win per key) and applied
    once, so presets named in either source land first and every explicit key
    from either source lands after them. Unknown keys abort before anything
    else happens.
    """
    file_pairs = parse_config_file(path) if path else {}
    overrides = overrides or {}
    unknown = sorted(k for k in list(file_pairs) + list(overrides) if k not in config_keys())
    if unknown:
        raise ConfigurationError(f"Unknown config keys: {unknown}")

    cfg = ExperimentConfig()
    cfg.apply({**file_pairs, **overrides})
    cfg.validate()
    return cfg


# Global default configuration instance
config = ExperimentConfig()
