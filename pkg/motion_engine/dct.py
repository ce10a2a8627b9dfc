"""
Orthonormal DCT-II basis along the temporal axis.

D[i][j] = sqrt(2/T) * (1/sqrt(1 + delta(i, 0))) * cos(pi * (2j + 1) * i / (2T))

With this scaling D is orthonormal, so the inverse is its transpose.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidSizeError, ShapeError
from .tensor_core import Matrix, get_dtype, matmul, transpose


@dataclass(frozen=True)
class DctBasis:
    size: int
    forward: np.ndarray
    inverse: np.ndarray


@lru_cache(maxsize=None)
def _cached_basis(size: int, dtype_name: str) -> DctBasis:
    i = np.arange(size, dtype=np.float64)[:, None]
    j = np.arange(size, dtype=np.float64)[None, :]
    scale = np.where(i == 0, 1.0 / np.sqrt(2.0), 1.0) * np.sqrt(2.0 / size)
    forward = (scale * np.cos(np.pi * (2.0 * j + 1.0) * i / (2.0 * size))).astype(dtype_name)
    inverse = transpose(forward)
    forward.flags.writeable = False
    inverse.flags.writeable = False
    return DctBasis(size=size, forward=forward, inverse=inverse)


def build_dct_basis(T: int) -> DctBasis:
    """Build (or fetch the cached) T x T basis in the active precision."""
    if int(T) != T or T < 1:
        raise InvalidSizeError(f"DCT size must be a positive integer, got {T}")
    return _cached_basis(int(T), np.dtype(get_dtype()).name)


def _check_rows(basis: DctBasis, x: Matrix, op: str) -> None:
    if x.ndim < 2 or x.shape[-2] != basis.size:
        raise ShapeError(f"{op} expects {basis.size} rows, got shape {x.shape}")


def apply_dct(basis: DctBasis, x: Matrix) -> Matrix:
    """Temporal DCT: D @ x. Columns never interact."""
    _check_rows(basis, x, "apply_dct")
    return matmul(basis.forward, x)


def apply_idct(basis: DctBasis, y: Matrix) -> Matrix:
    _check_rows(basis, y, "apply_idct")
    return matmul(basis.inverse, y)


def dct_backward(basis: DctBasis, grad_out: Matrix) -> Matrix:
    """Gradient of apply_dct with respect to its input."""
    _check_rows(basis, grad_out, "dct_backward")
    return matmul(basis.inverse, grad_out)


def idct_backward(basis: DctBasis, grad_out: Matrix) -> Matrix:
    """Gradient of apply_idct with respect to its input."""
    _check_rows(basis, grad_out, "idct_backward")
    return matmul(basis.forward, grad_out)
