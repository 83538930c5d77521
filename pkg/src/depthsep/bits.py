"""Bit-vector kernel: parity inner products, XOR, and coordinate rounding.

Everything here is stateless and safe to call from multiple threads.
"""

from __future__ import annotations

import numpy as np

__all__ = ["as_bits", "ip_mod2", "xor_bits", "round_half_away"]


def as_bits(x, length: int | None = None) -> np.ndarray:
    """Validate and convert ``x`` to an int8 array of 0/1 entries.

    Raises ValueError if any entry is not exactly 0 or 1, or if ``length``
    is given and does not match.
    """
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-d bit vector, got shape {arr.shape}")
    out = arr.astype(np.int8)
    if not np.array_equal(out, arr) or not np.isin(out, (0, 1)).all():
        raise ValueError("bit vector entries must be exactly 0 or 1")
    if length is not None and out.size != length:
        raise ValueError(f"expected length {length}, got {out.size}")
    return out


def _check_same_length(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")


def ip_mod2(x, y) -> int:
    """Inner product mod 2 of two equal-length integer vectors.

    Accepts arbitrary integer entries (not just bits) so that composition
    with rounding stays total off the nominal support.
    """
    xa = np.asarray(x, dtype=np.int64)
    ya = np.asarray(y, dtype=np.int64)
    _check_same_length(xa, ya)
    return int(np.dot(xa, ya)) & 1


def xor_bits(x, y) -> np.ndarray:
    """Coordinatewise sum mod 2 of two equal-length bit vectors."""
    xa = as_bits(x)
    ya = as_bits(y)
    _check_same_length(xa, ya)
    return xa ^ ya


def round_half_away(v) -> np.ndarray:
    """Coordinatewise nearest integer, ties rounded away from zero.

    numpy's ``round`` uses banker's rounding; the fixed away-from-zero rule
    keeps the target function total on all inputs (ties never occur on the
    sampled support, where scaled coordinates lie in [0, 1/4] u [3/4, 1]).
    """
    arr = np.asarray(v, dtype=np.float64)
    return np.where(arr >= 0, np.floor(arr + 0.5), np.ceil(arr - 0.5)).astype(np.int64)
