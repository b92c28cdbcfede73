"""Small input-validation helpers shared across the package.

All helpers raise ValueError with the offending name in the message, so
construction errors point at the exact field.
"""

from __future__ import annotations

import numbers

import numpy as np


def check_finite_number(value, name: str) -> float:
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise ValueError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not np.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    return value


def check_nonnegative(value, name: str) -> float:
    value = check_finite_number(value, name)
    if value < 0:
        raise ValueError(f"{name} must be >= 0, got {value}")
    return value


def check_positive(value, name: str) -> float:
    value = check_finite_number(value, name)
    if value <= 0:
        raise ValueError(f"{name} must be > 0, got {value}")
    return value


def check_fraction(value, name: str, *, open_left: bool = False) -> float:
    """Validate a value in [0, 1] (or (0, 1] with open_left)."""
    value = check_finite_number(value, name)
    low_ok = value > 0 if open_left else value >= 0
    if not (low_ok and value <= 1):
        bracket = "(0, 1]" if open_left else "[0, 1]"
        raise ValueError(f"{name} must be in {bracket}, got {value}")
    return value


def check_count(value, name: str, upper: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < 0:
        raise ValueError(f"{name} must be >= 0, got {value}")
    if upper is not None and value > upper:
        raise ValueError(f"{name} must be <= {upper}, got {value}")
    return value


def check_profile_array(values, name: str, length: int | None = None) -> np.ndarray:
    """Coerce to a float array, requiring finite nonnegative entries."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise ValueError(f"{name} must have length {length}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite everywhere")
    if np.any(arr < 0):
        raise ValueError(f"{name} must be nonnegative everywhere")
    return arr
