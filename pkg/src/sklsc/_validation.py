"""Input validation helpers shared by the numerical modules and estimators."""

import numbers

import numpy as np

from .exceptions import GridMismatchError, InvalidFieldError


def check_same_grid(*fields):
    """Raise ``GridMismatchError`` unless every field lives on one grid."""
    grids = [f.grid for f in fields]
    first = grids[0]
    for g in grids[1:]:
        if g != first:
            raise GridMismatchError(f"grid mismatch: {first} vs {g}")
    return first


def check_finite_array(values, shape=None, name="values"):
    arr = np.asarray(values, dtype=float)
    if shape is not None:
        if arr.size != int(np.prod(shape)):
            raise InvalidFieldError(
                f"{name}: expected {int(np.prod(shape))} values, got {arr.size}"
            )
        arr = arr.reshape(shape)
    if not np.all(np.isfinite(arr)):
        raise InvalidFieldError(f"{name}: contains non-finite entries")
    return arr


def check_positive_scalar(value, name, strict=True):
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ValueError(f"{name} must be a finite real number, got {value!r}")
    if strict and value <= 0:
        raise ValueError(f"{name} must be > 0, got {value!r}")
    if not strict and value < 0:
        raise ValueError(f"{name} must be >= 0, got {value!r}")
    return float(value)


def check_complex_dimension(n):
    if not isinstance(n, numbers.Integral) or n < 2:
        raise ValueError(f"complex dimension n must be an integer >= 2, got {n!r}")
    return int(n)
