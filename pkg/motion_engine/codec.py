"""
Shared framing for the binary motion and checkpoint files.

Layout: 4-byte magic, u16 little-endian version, body, then a u64
little-endian checksum (8-byte BLAKE2b digest) of every preceding byte.
"""
import hashlib
import struct

from .errors import BadMagicError, ChecksumError, FileFormatError, TruncatedFileError, UnsupportedVersionError

PREAMBLE = struct.Struct("<4sH")
CHECKSUM = struct.Struct("<Q")


def checksum64(data: bytes) -> int:
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "little")


def seal(magic: bytes, version: int, body: bytes) -> bytes:
    framed = PREAMBLE.pack(magic, version) + body
    return framed + CHECKSUM.pack(checksum64(framed))


def check_preamble(blob: bytes, magic: bytes, version: int, kind: str) -> None:
    """Validate magic and version before anything else is parsed."""
    if len(blob) < PREAMBLE.size:
        raise TruncatedFileError(f"{kind} file is {len(blob)} bytes, shorter than its preamble")
    found_magic, found_version = PREAMBLE.unpack_from(blob, 0)
    if found_magic != magic:
        raise BadMagicError(f"{kind} file has magic {found_magic!r}, expected {magic!r}")
    if found_version != version:
        raise UnsupportedVersionError(f"{kind} file version {found_version} is not supported (expected {version})")


def verify_length_and_checksum(blob: bytes, body_end: int, kind: str) -> None:
    """body_end is the offset where the checksum should start."""
    expected = body_end + CHECKSUM.size
    if len(blob) < expected:
        raise TruncatedFileError(f"{kind} file is {len(blob)} bytes, expected {expected}")
    if len(blob) > expected:
        raise FileFormatError(f"{kind} file has {len(blob) - expected} unexpected trailing bytes")
    (stored,) = CHECKSUM.unpack_from(blob, body_end)
    if stored != checksum64(blob[:body_end]):
        raise ChecksumError(f"{kind} file checksum mismatch")
