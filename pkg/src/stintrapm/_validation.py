"""Input validation helpers shared by the estimators and functional API."""
from __future__ import annotations

import math
from numbers import Real

import numpy as np
from sklearn.utils.validation import check_array, check_consistent_length

from .exceptions import ParameterError


def check_penalty(lam, name="lambda"):
    """Return ``lam`` as a float, rejecting non-finite or non-positive values."""
    if isinstance(lam, bool) or not isinstance(lam, Real):
        raise ParameterError(f"{name} must be a real number, got {lam!r}")
    lam = float(lam)
    if not math.isfinite(lam) or lam <= 0.0:
        raise ParameterError(f"{name} must be finite and > 0, got {lam}")
    return lam


def check_nonnegative(value, name):
    if value is None or not math.isfinite(value) or value < 0:
        raise ParameterError(f"{name} must be a finite value >= 0, got {value!r}")
    return value


def check_count(value, name, minimum=0):
    if isinstance(value, bool) or int(value) != value or value < minimum:
        raise ParameterError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def check_weighted_system(X, y, sample_weight=None):
    """Validate a (X, y, w) triple and return float64 arrays.

    ``sample_weight`` defaults to ones. Weights must be strictly positive,
    since zero-possession stints are filtered before the system is built.
    """
    X = check_array(X, dtype=np.float64, ensure_2d=True)
    y = check_array(y, dtype=np.float64, ensure_2d=False).ravel()
    if sample_weight is None:
        w = np.ones(X.shape[0])
    else:
        w = check_array(sample_weight, dtype=np.float64, ensure_2d=False).ravel()
    check_consistent_length(X, y, w)
    if np.any(w <= 0):
        raise ParameterError("sample weights must be strictly positive")
    return X, y, w
