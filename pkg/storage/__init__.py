"""
Storage - run directories, artifacts and model checkpoints.
"""
from .checkpoint import decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from .service import RunStorage, calculate_file_hash

__all__ = [
    "RunStorage",
    "calculate_file_hash",
    "encode_checkpoint",
    "decode_checkpoint",
    "save_checkpoint",
    "load_checkpoint",
]
