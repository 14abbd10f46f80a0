"""Small input-validation helpers shared across the package."""

import math
import numbers

import numpy as np
from sklearn.utils.validation import check_scalar


class DomainError(ValueError):
    """Raised when an argument lies outside the validity domain of a bound."""


def positive(value, name, *, allow_inf=False):
    """Return ``value`` as float after checking it is a positive real."""
    check_scalar(value, name, numbers.Real, min_val=0, include_boundaries="neither")
    value = float(value)
    if math.isnan(value) or (math.isinf(value) and not allow_inf):
        raise ValueError(f"{name} must be finite, got {value}")
    return value


def nonnegative(value, name):
    check_scalar(value, name, numbers.Real, min_val=0, include_boundaries="left")
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    return value


def count(value, name, *, minimum=0):
    check_scalar(value, name, numbers.Integral, min_val=minimum, include_boundaries="left")
    return int(value)


def real_array(values, name):
    """1-D float array; scalars are promoted."""
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim > 1:
        raise ValueError(f"{name} must be a scalar or 1-D, got shape {arr.shape}")
    if np.any(np.isnan(arr)):
        raise ValueError(f"{name} contains NaN")
    return arr
