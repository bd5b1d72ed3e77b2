"""
Softmax cross-entropy over training identities.
"""
import logging

import numpy as np
from scipy.special import log_softmax

from stareid.errors import DimensionError
from stareid.numerics.ops import GradPair

logger = logging.getLogger(__name__)


def softmax_xent(logits, labels, reduction='sum'):
    """-sum_rows log softmax(logits)[label], or the mean over rows."""
    logits = np.asarray(logits)
    labels = np.asarray(labels)
    if reduction not in ('sum', 'mean'):
        raise ValueError("Unknown reduction {!r}.".format(reduction))
    if logits.ndim != 2 or labels.shape != (logits.shape[0], ):
        raise DimensionError(
            "softmax_xent row axis: logits {} vs labels {}.".format(logits.shape, labels.shape))
    classes = logits.shape[1]
    if np.any((labels < 0) | (labels >= classes)):
        raise ValueError("Labels must lie in [0, {}), got {}.".format(classes, labels.tolist()))

    # log_softmax subtracts the row maximum before exponentiating.
    log_probs = log_softmax(logits, axis=1)
    rows = np.arange(len(labels))
    scale = 1.0 / max(len(labels), 1) if reduction == 'mean' else 1.0
    loss = float(-log_probs[rows, labels].sum() * scale)

    def backward(grad):
        d_logits = np.exp(log_probs)
        d_logits[rows, labels] -= 1
        return (d_logits * (float(grad) * scale), )

    return GradPair(loss, backward)
