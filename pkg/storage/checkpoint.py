"""
Model checkpoint files.

Layout (all little-endian):
    "SMLP" | u16 version
    | u32 input_len | u32 output_len | u32 channels | u32 num_blocks
    | u32 use_transpose | u32 use_layernorm | u32 use_dct
    | every parameter array in declaration order as f32
    | u64 checksum of all preceding bytes
"""
import logging
import struct
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from config import ConfigurationError, ModelConfig
from motion_engine.codec import PREAMBLE, check_preamble, seal, verify_length_and_checksum
from motion_engine.errors import FileFormatError, TruncatedFileError
from motion_engine.model import SiMlpeParams, param_count, param_shapes
from motion_engine.tensor_core import get_dtype

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"SMLP"
CHECKPOINT_VERSION = 1
_CONFIG = struct.Struct("<7I")


def encode_checkpoint(config: ModelConfig, params: SiMlpeParams) -> bytes:
    header = _CONFIG.pack(
        config.input_len,
        config.output_len,
        config.channels,
        config.num_blocks,
        int(config.use_transpose),
        int(config.use_layernorm),
        int(config.use_dct),
    )
    arrays = params.named_arrays()
    expected = param_shapes(config)
    if list(arrays) != list(expected):
        raise ConfigurationError("Parameters do not match the checkpoint config layout")
    payload = b"".join(np.ascontiguousarray(arr, dtype="<f4").tobytes() for arr in arrays.values())
    return seal(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, header + payload)


def decode_checkpoint(blob: bytes) -> Tuple[ModelConfig, SiMlpeParams]:
    check_preamble(blob, CHECKPOINT_MAGIC, CHECKPOINT_VERSION, "Checkpoint")
    offset = PREAMBLE.size
    if len(blob) < offset + _CONFIG.size:
        raise TruncatedFileError(f"Checkpoint file is {len(blob)} bytes, shorter than its header")
    T, N, C, n, use_transpose, use_layernorm, use_dct = _CONFIG.unpack_from(blob, offset)
    config = ModelConfig(
        input_len=T,
        output_len=N,
        channels=C,
        num_blocks=n,
        use_transpose=bool(use_transpose),
        use_layernorm=bool(use_layernorm),
        use_dct=bool(use_dct),
    )
    try:
        config.validate()
    except ConfigurationError as e:
        raise FileFormatError(f"Checkpoint header holds an invalid model config: {e}")

    # Length and checksum come from the closed-form count, before any per-layer work.
    offset += _CONFIG.size
    verify_length_and_checksum(blob, offset + 4 * param_count(config), "Checkpoint")
    shapes = param_shapes(config)

    dtype = get_dtype()
    arrays = {}
    for name, shape in shapes.items():
        size = int(np.prod(shape))
        arrays[name] = np.frombuffer(blob, dtype="<f4", count=size, offset=offset).reshape(shape).astype(dtype)
        offset += 4 * size
    return config, SiMlpeParams.from_arrays(config, arrays)


def save_checkpoint(config: ModelConfig, params: SiMlpeParams, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(config, params))
    logger.info(f"[CHECKPOINT] Saved {config.num_blocks}-block model to {path}")
    return path


def load_checkpoint(path: Union[str, Path]) -> Tuple[ModelConfig, SiMlpeParams]:
    path = Path(path)
    config, params = decode_checkpoint(path.read_bytes())
    logger.info(
        f"[CHECKPOINT] Loaded {path}: T={config.input_len}, N={config.output_len}, "
        f"C={config.channels}, blocks={config.num_blocks}"
    )
    return config, params
