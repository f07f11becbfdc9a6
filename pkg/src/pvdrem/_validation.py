"""Small argument checks used across the package."""

import math
import numbers

import numpy as np

from .exceptions import ConfigurationError, DomainError


def check_positive(name, value, error=DomainError):
    if not isinstance(value, numbers.Real) or not math.isfinite(value) or value <= 0:
        raise error(f"{name} must be a finite positive number, got {value!r}")
    return float(value)


def check_nonnegative(name, value, error=DomainError):
    if not isinstance(value, numbers.Real) or not math.isfinite(value) or value < 0:
        raise error(f"{name} must be a finite non-negative number, got {value!r}")
    return float(value)


def check_positive_int(name, value, error=DomainError):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value <= 0:
        raise error(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_grid(v_grid):
    """Return ``v_grid`` as a 1-D float array, ascending and non-negative."""
    v = np.asarray(v_grid, dtype=float).reshape(-1)
    if v.size and (not np.all(np.isfinite(v)) or v[0] < 0 or np.any(np.diff(v) < 0)):
        raise DomainError("voltage grid must be finite, non-negative and ascending")
    return v


def check_increasing(name, values):
    vals = [float(x) for x in values]
    if any(b <= a for a, b in zip(vals, vals[1:])) or vals[0] <= 0:
        raise ConfigurationError(f"{name} must be positive and strictly increasing, got {vals}")
    return tuple(vals)
