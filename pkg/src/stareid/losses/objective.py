"""
Combined training objective: L = L_softmax + L_triplet + lambda * Reg.
"""
import logging
from dataclasses import dataclass

import numpy as np

from stareid.errors import DimensionError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LabeledBatch:
    """P identities x K_per_id rows of embeddings, their labels and classifier logits."""
    embeddings: np.ndarray
    labels: np.ndarray
    logits: np.ndarray

    def __post_init__(self):
        rows = self.embeddings.shape[0]
        if self.labels.shape != (rows, ) or self.logits.shape[0] != rows:
            raise DimensionError(
                "LabeledBatch row axis: embeddings {}, labels {}, logits {}.".format(
                    self.embeddings.shape, self.labels.shape, self.logits.shape))

    @property
    def identities(self):
        return len(np.unique(self.labels))

    @property
    def rows_per_identity(self):
        counts = np.unique(self.labels, return_counts=True)[1]
        if np.any(counts != counts[0]):
            raise ValueError("Batch is not balanced: rows per identity {}.".format(counts.tolist()))
        return int(counts[0])


def total_objective(l_softmax, l_triplet, reg, reg_weight):
    return l_softmax + l_triplet + reg_weight * reg


@dataclass(frozen=True)
class LossReport:
    l_triplet: float
    l_softmax: float
    reg: float
    reg_weight: float
    active_triplets: int = 0

    @property
    def total(self):
        return total_objective(self.l_softmax, self.l_triplet, self.reg, self.reg_weight)

    def as_dict(self):
        return {
            'total': self.total,
            'softmax': self.l_softmax,
            'triplet': self.l_triplet,
            'reg': self.reg,
            'active_triplets': self.active_triplets,
        }
