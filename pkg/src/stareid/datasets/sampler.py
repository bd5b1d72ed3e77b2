"""
P x K identity batches for the batch-hard triplet loss.
"""
import logging
from collections import OrderedDict

import numpy as np

logger = logging.getLogger(__name__)


def pk_batch(dataset, p, k_per_id, rng):
    """
    Draw p distinct identities and k_per_id tracklets of each (with replacement
    for identities that have fewer), shuffled. Returns (tracklets, identities).
    """
    if p < 1 or k_per_id < 1:
        raise ValueError("P and K must be >= 1, got P={} and K={}.".format(p, k_per_id))

    by_identity = OrderedDict()
    for index, tracklet in enumerate(dataset):
        by_identity.setdefault(tracklet.identity, []).append(index)

    if len(by_identity) < p:
        raise ValueError("Need {} identities for a P x K batch, dataset has {}.".format(p, len(by_identity)))
    if p < 2:
        logger.warning("A batch with a single identity has no negatives for the triplet loss.")

    identities = list(by_identity)
    chosen = rng.choice(len(identities), size=p, replace=False)

    indices = []
    for position in chosen:
        candidates = by_identity[identities[position]]
        replace = len(candidates) < k_per_id
        indices.extend(rng.choice(candidates, size=k_per_id, replace=replace))

    order = rng.permutation(len(indices))
    batch = [dataset[indices[i]] for i in order]
    labels = np.array([t.identity for t in batch])
    return batch, labels
