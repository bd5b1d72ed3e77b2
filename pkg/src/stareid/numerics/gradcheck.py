"""
Finite-difference verification of the hand-written backward passes.
"""
import logging

import numpy as np

from stareid.errors import DimensionError
from stareid.errors import EvaluationError
from stareid.numerics.ops import GradPair

logger = logging.getLogger(__name__)

_DEFAULT_STEP = 1e-6


def _scalar_value(f, x):
    out = f(x)
    value = out.value if isinstance(out, GradPair) else out
    value = float(np.asarray(value))
    if not np.isfinite(value):
        raise EvaluationError("Function under check returned {}.".format(value))
    return value


def numeric_gradient(f, x, h=_DEFAULT_STEP):
    """Central differences of the scalar function `f` at `x`, one coordinate at a time."""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + h
        upper = _scalar_value(f, x)
        flat[i] = original - h
        lower = _scalar_value(f, x)
        flat[i] = original
        grad.flat[i] = (upper - lower) / (2 * h)
    return grad


def gradcheck(f, x, h=_DEFAULT_STEP):
    """
    Compare the analytic gradient of `f` at `x` with central differences.

    `f` maps a float64 array to a GradPair with a scalar value whose backward,
    given the upstream gradient 1.0, returns the gradient with respect to x.

    Returns max_i |analytic_i - numeric_i| / max(1, |analytic_i|, |numeric_i|).
    """
    if h <= 0:
        raise ValueError("Finite-difference step must be positive, got {}.".format(h))

    x = np.array(x, dtype=np.float64)
    out = f(x.copy())
    if not np.isfinite(float(np.asarray(out.value))):
        raise EvaluationError("Function under check returned {}.".format(out.value))

    analytic = out.backward(1.0)
    if isinstance(analytic, tuple):
        analytic = analytic[0]
    analytic = np.asarray(analytic, dtype=np.float64)
    if analytic.shape != x.shape:
        raise DimensionError(
            "Analytic gradient shape {} does not match input shape {}.".format(analytic.shape, x.shape))

    numeric = numeric_gradient(f, x, h)
    if x.size == 0:
        return 0.0

    scale = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))
    error = float(np.max(np.abs(analytic - numeric) / scale))
    logger.debug("gradcheck over {} coordinates: max relative error {:.3e}.".format(x.size, error))
    return error
