"""
Batch-hard triplet loss.

For each anchor the hardest positive is the farthest other row of the same
identity, the hardest negative the closest row of any other identity; the
anchor contributes [margin + d(a, p) - d(a, n)]_+. Ties resolve to the lowest
row index.
"""
import logging

import numpy as np

from stareid.errors import DimensionError
from stareid.numerics.ops import GradPair

logger = logging.getLogger(__name__)

_REDUCTIONS = ('sum', 'mean')


def _check_batch(embeddings, labels):
    if embeddings.ndim != 2 or embeddings.shape[1] < 1:
        raise DimensionError("Triplet loss needs B x E embeddings, got shape {}.".format(embeddings.shape))
    if labels.shape != (embeddings.shape[0], ):
        raise DimensionError(
            "Triplet loss label axis: {} labels for {} rows.".format(labels.shape, embeddings.shape[0]))

    identities, counts = np.unique(labels, return_counts=True)
    if np.any(counts < 2):
        raise ValueError(
            "Every identity needs at least 2 rows for a positive; identities {} have one.".format(
                identities[counts < 2].tolist()))
    if len(identities) < 2:
        raise ValueError("Triplet loss needs at least 2 identities for a negative.")


def _hardest(embeddings, labels):
    diff = embeddings[:, None, :] - embeddings[None, :, :]
    dist = np.sqrt(np.square(diff).sum(axis=-1))

    same = labels[:, None] == labels[None, :]
    positive = same & ~np.eye(len(labels), dtype=bool)
    # argmax / argmin return the first hit, i.e. the lowest row index on ties.
    hardest_positive = np.argmax(np.where(positive, dist, -np.inf), axis=1)
    hardest_negative = np.argmin(np.where(same, np.inf, dist), axis=1)
    return diff, dist, hardest_positive, hardest_negative


def triplet_terms(embeddings, labels, margin):
    """Per-anchor hinge values, without gradient."""
    embeddings = np.asarray(embeddings)
    labels = np.asarray(labels)
    _check_batch(embeddings, labels)
    _, dist, positive, negative = _hardest(embeddings, labels)
    rows = np.arange(len(labels))
    return np.maximum(0, margin + dist[rows, positive] - dist[rows, negative])


def batch_hard_triplet(embeddings, labels, margin, reduction='sum', with_active=False):
    """GradPair of the loss; with `with_active`, also the number of anchors with a positive hinge."""
    embeddings = np.asarray(embeddings)
    labels = np.asarray(labels)
    if reduction not in _REDUCTIONS:
        raise ValueError("Unknown reduction {!r}; use one of {}.".format(reduction, _REDUCTIONS))
    _check_batch(embeddings, labels)

    diff, dist, positive, negative = _hardest(embeddings, labels)
    rows = np.arange(len(labels))
    terms = margin + dist[rows, positive] - dist[rows, negative]
    active = terms > 0
    scale = 1.0 / len(labels) if reduction == 'mean' else 1.0
    loss = float(np.where(active, terms, 0).sum() * scale)

    def backward(grad):
        grad = float(grad) * scale
        d_embeddings = np.zeros_like(embeddings)
        for anchor in np.flatnonzero(active):
            for other, sign in ((positive[anchor], 1.0), (negative[anchor], -1.0)):
                d = dist[anchor, other]
                if d == 0:
                    continue
                unit = diff[anchor, other] / d
                d_embeddings[anchor] += sign * grad * unit
                d_embeddings[other] -= sign * grad * unit
        return (d_embeddings, )

    logger.debug("Triplet loss {:.6f} with {} active anchors of {}.".format(loss, int(active.sum()), len(labels)))
    result = GradPair(loss, backward)
    return (result, int(active.sum())) if with_active else result
