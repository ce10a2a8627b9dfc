"""
Motion sequence container and file I/O.

Canonical binary file (version 1):
    "MOTN" | u16 version | f32 frame_rate | u32 num_frames | u32 num_joints
    | num_frames * num_joints * 3 f32 (frame-major, joint-major, x y z)
    | u64 checksum
All little-endian. Coordinates are millimeters.
"""
from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from .codec import PREAMBLE, check_preamble, seal, verify_length_and_checksum
from .errors import EmptyInputError, InputError, MotionParseError, TruncatedFileError

logger = logging.getLogger(__name__)

MOTION_MAGIC = b"MOTN"
MOTION_VERSION = 1
_HEADER = struct.Struct("<fII")


@dataclass(frozen=True)
class MotionSequence:
    """L frames of K joints at a fixed frame rate; coords is L x 3K float32."""
    frame_rate: float
    coords: np.ndarray

    def __post_init__(self):
        coords = np.ascontiguousarray(self.coords, dtype=np.float32)
        if coords.ndim != 2 or coords.shape[1] % 3 != 0:
            raise InputError(f"Motion coords must be L x 3K, got shape {coords.shape}")
        if not np.all(np.isfinite(coords)):
            raise InputError("Motion coords contain non-finite values")
        if not self.frame_rate > 0:
            raise InputError(f"frame_rate must be positive, got {self.frame_rate}")
        coords.flags.writeable = False
        object.__setattr__(self, "coords", coords)
        # Stored as f32 on disk; keep the in-memory value identical.
        object.__setattr__(self, "frame_rate", float(np.float32(self.frame_rate)))

    @property
    def num_frames(self) -> int:
        return self.coords.shape[0]

    @property
    def num_joints(self) -> int:
        return self.coords.shape[1] // 3

    @property
    def channels(self) -> int:
        return self.coords.shape[1]

    def equals(self, other: "MotionSequence") -> bool:
        """Bitwise equality of frame rate and coordinates."""
        return (
            self.frame_rate == other.frame_rate
            and self.coords.shape == other.coords.shape
            and self.coords.tobytes() == other.coords.tobytes()
        )


def encode_motion(seq: MotionSequence) -> bytes:
    header = _HEADER.pack(seq.frame_rate, seq.num_frames, seq.num_joints)
    payload = seq.coords.astype("<f4", copy=False).tobytes()
    return seal(MOTION_MAGIC, MOTION_VERSION, header + payload)


def decode_motion(blob: bytes) -> MotionSequence:
    check_preamble(blob, MOTION_MAGIC, MOTION_VERSION, "Motion")
    header_end = PREAMBLE.size + _HEADER.size
    if len(blob) < header_end:
        raise TruncatedFileError(f"Motion file is {len(blob)} bytes, shorter than its header")
    frame_rate, num_frames, num_joints = _HEADER.unpack_from(blob, PREAMBLE.size)
    payload_end = header_end + num_frames * num_joints * 3 * 4
    verify_length_and_checksum(blob, payload_end, "Motion")
    coords = np.frombuffer(blob, dtype="<f4", count=num_frames * num_joints * 3, offset=header_end)
    return MotionSequence(
        frame_rate=float(frame_rate),
        coords=coords.reshape(num_frames, num_joints * 3).astype(np.float32),
    )


def write_motion(seq: MotionSequence, path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_motion(seq))
    logger.info(f"[MOTION IO] Wrote {seq.num_frames} frames x {seq.num_joints} joints to {path}")


def read_motion(path: Union[str, Path]) -> MotionSequence:
    path = Path(path)
    seq = decode_motion(path.read_bytes())
    logger.info(f"[MOTION IO] Loaded {seq.num_frames} frames x {seq.num_joints} joints from {path}")
    return seq


def import_csv(path: Union[str, Path], frame_rate: float, K: int) -> MotionSequence:
    """
    Import a comma-separated file with 3K millimeter values per line.

    Lines starting with '#' and blank lines are skipped; row order is kept.

    Raises:
        EmptyInputError: if the file holds no data lines
        MotionParseError: on a wrong field count or a non-numeric field,
            naming the 1-based line number
    """
    path = Path(path)
    expected = 3 * K
    rows, line_numbers = [], []
    with open(path, "r", encoding="utf-8-sig") as f:
        for line_no, line in enumerate(f, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            fields = [part.strip() for part in stripped.split(",")]
            if len(fields) != expected:
                raise MotionParseError(
                    f"{path}: line {line_no} has {len(fields)} fields, expected {expected} (K={K})"
                )
            rows.append(fields)
            line_numbers.append(line_no)

    if not rows:
        raise EmptyInputError(f"{path}: no motion frames found")

    raw = pd.DataFrame(rows)
    values = raw.apply(pd.to_numeric, errors="coerce")
    bad = values.isna().to_numpy()
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise MotionParseError(
            f"{path}: line {line_numbers[row]} field {col + 1} is not numeric ('{raw.iat[row, col]}')"
        )

    logger.info(f"[MOTION IO] Imported {len(rows)} frames from CSV {path}")
    return MotionSequence(frame_rate=frame_rate, coords=values.to_numpy(dtype=np.float64))


def load_motion(path: Union[str, Path], frame_rate: float, num_joints: int = 0) -> MotionSequence:
    """Load by extension: .csv goes through import_csv, anything else is canonical binary."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        if num_joints < 1:
            with open(path, "r", encoding="utf-8-sig") as f:
                first = next((ln for ln in f if ln.strip() and not ln.lstrip().startswith("#")), "")
            num_joints = max(1, len(first.split(",")) // 3)
        return import_csv(path, frame_rate, num_joints)
    return read_motion(path)
