"""
Adam with classic L2 weight decay (the decay term is added to the gradient).
"""
import logging
from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace

import numpy as np

from stareid.errors import DimensionError

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    first_moment: dict = field(default_factory=dict)
    second_moment: dict = field(default_factory=dict)
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0

    @classmethod
    def for_params(cls, params, **hyperparameters):
        return cls({name: np.zeros_like(value) for name, value in params.items()},
                   {name: np.zeros_like(value) for name, value in params.items()},
                   **hyperparameters)


def adam_step(params, grads, state, lr):
    """
    One bias-corrected Adam update. Inputs are left untouched; returns the new
    parameter dict and the new state.
    """
    if lr <= 0:
        raise ValueError("Learning rate must be positive, got {}.".format(lr))

    step = state.step + 1
    first_correction = 1 - state.beta1**step
    second_correction = 1 - state.beta2**step

    new_params = {}
    first_moment = {}
    second_moment = {}
    for name, value in params.items():
        grad = grads[name]
        if grad.shape != value.shape or state.first_moment[name].shape != value.shape:
            raise DimensionError(
                "Parameter {!r}: gradient {} / moment {} do not match shape {}.".format(
                    name, grad.shape, state.first_moment[name].shape, value.shape))

        if state.weight_decay:
            grad = grad + state.weight_decay * value
        m = state.beta1 * state.first_moment[name] + (1 - state.beta1) * grad
        v = state.beta2 * state.second_moment[name] + (1 - state.beta2) * np.square(grad)
        update = (m / first_correction) / (np.sqrt(v / second_correction) + state.eps)

        new_params[name] = (value - lr * update).astype(value.dtype, copy=False)
        first_moment[name] = m.astype(value.dtype, copy=False)
        second_moment[name] = v.astype(value.dtype, copy=False)

    return new_params, replace(state, first_moment=first_moment, second_moment=second_moment, step=step)
