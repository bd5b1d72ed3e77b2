"""
Retrieval evaluation: Euclidean distances, cross-camera CMC and mAP.

Per query, gallery items sharing both identity and camera with the query are
dropped, as are distractors; the remaining same-identity items are the
matches. Distance ties are broken by gallery index. Queries without any match
left are skipped and counted.
"""
import logging
from dataclasses import dataclass

import numpy as np
import pandas
from scipy.spatial.distance import cdist

from stareid.errors import DimensionError

logger = logging.getLogger(__name__)

DEFAULT_RANKS = (1, 5, 10, 20)


@dataclass
class RetrievalSet:
    query_embeddings: np.ndarray
    query_identities: np.ndarray
    query_cameras: np.ndarray
    gallery_embeddings: np.ndarray
    gallery_identities: np.ndarray
    gallery_cameras: np.ndarray
    gallery_distractors: np.ndarray = None

    def __post_init__(self):
        self.query_embeddings = np.asarray(self.query_embeddings)
        self.gallery_embeddings = np.asarray(self.gallery_embeddings)
        self.query_identities = np.asarray(self.query_identities)
        self.query_cameras = np.asarray(self.query_cameras)
        self.gallery_identities = np.asarray(self.gallery_identities)
        self.gallery_cameras = np.asarray(self.gallery_cameras)
        if self.gallery_distractors is None:
            self.gallery_distractors = np.zeros(len(self.gallery_identities), dtype=bool)
        self.gallery_distractors = np.asarray(self.gallery_distractors, dtype=bool)

        queries = len(self.query_identities)
        items = len(self.gallery_identities)
        if len(self.query_cameras) != queries or len(self.query_embeddings) != queries:
            raise DimensionError("RetrievalSet query axis: embeddings, identities and cameras differ in length.")
        if len(self.gallery_cameras) != items or len(self.gallery_distractors) != items \
                or len(self.gallery_embeddings) != items:
            raise DimensionError("RetrievalSet gallery axis: embeddings, identities, cameras and flags differ.")


@dataclass(frozen=True)
class MetricsReport:
    rank1: float
    rank5: float
    rank10: float
    rank20: float
    mAP: float
    evaluated: int
    skipped: int

    def as_dict(self):
        return {
            'rank1': self.rank1,
            'rank5': self.rank5,
            'rank10': self.rank10,
            'rank20': self.rank20,
            'mAP': self.mAP,
            'evaluated': self.evaluated,
            'skipped': self.skipped,
        }

    def to_lines(self):
        return '\n'.join('{}={!r}'.format(key, value) for key, value in self.as_dict().items())

    def to_frame(self):
        return pandas.DataFrame([self.as_dict()])


def pairwise_distances(query, gallery, normalize=False):
    query = np.atleast_2d(np.asarray(query, dtype=np.float64))
    gallery = np.atleast_2d(np.asarray(gallery, dtype=np.float64))
    if query.shape[1] != gallery.shape[1]:
        raise DimensionError(
            "pairwise_distances embedding axis: query width {} vs gallery width {}.".format(
                query.shape[1], gallery.shape[1]))
    if normalize:
        query = query / np.maximum(np.linalg.norm(query, axis=1, keepdims=True), 1e-12)
        gallery = gallery / np.maximum(np.linalg.norm(gallery, axis=1, keepdims=True), 1e-12)
    if len(query) == 0 or len(gallery) == 0:
        return np.zeros((len(query), len(gallery)))
    return cdist(query, gallery, 'euclidean')


def _ranked_matches(dist, meta):
    """Yield, per query, the boolean match vector of the filtered ranked gallery (None when skipped)."""
    if dist.shape != (len(meta.query_identities), len(meta.gallery_identities)):
        raise DimensionError("Distance matrix {} does not match {} queries x {} gallery items.".format(
            dist.shape, len(meta.query_identities), len(meta.gallery_identities)))

    for q in range(dist.shape[0]):
        order = np.argsort(dist[q], kind='stable')
        identities = meta.gallery_identities[order]
        same_identity = identities == meta.query_identities[q]
        junk = (same_identity & (meta.gallery_cameras[order] == meta.query_cameras[q])) \
            | meta.gallery_distractors[order]
        matches = same_identity[~junk]
        yield matches if matches.any() else None


def _check_ranks(ranks, gallery_size):
    too_deep = [r for r in ranks if r < 1 or r > gallery_size]
    if too_deep:
        raise ValueError("Ranks {} fall outside a gallery of {} items.".format(too_deep, gallery_size))


def cmc(dist, meta, ranks=DEFAULT_RANKS):
    """Returns ({rank: accuracy}, evaluated, skipped)."""
    _check_ranks(ranks, len(meta.gallery_identities))
    hits = np.zeros(len(ranks))
    evaluated = 0
    skipped = 0
    for matches in _ranked_matches(np.asarray(dist), meta):
        if matches is None:
            skipped += 1
            continue
        evaluated += 1
        first = np.flatnonzero(matches)[0]
        hits += [first < r for r in ranks]

    if skipped:
        logger.warning("Skipped {} queries without a valid gallery match.".format(skipped))
    accuracy = hits / evaluated if evaluated else hits
    return {r: float(a) for r, a in zip(ranks, accuracy)}, evaluated, skipped


def mean_ap(dist, meta):
    """Returns (mAP, evaluated, skipped); AP averages precision at every match position."""
    precisions = []
    skipped = 0
    for matches in _ranked_matches(np.asarray(dist), meta):
        if matches is None:
            skipped += 1
            continue
        positions = np.flatnonzero(matches) + 1
        precisions.append(np.mean(np.arange(1, len(positions) + 1) / positions))

    return (float(np.mean(precisions)) if precisions else 0.0), len(precisions), skipped


def evaluate_retrieval(meta, normalize=False):
    """
    Full report. Ranks deeper than the gallery saturate at the full-gallery
    accuracy, which is what they would measure anyway.
    """
    dist = pairwise_distances(meta.query_embeddings, meta.gallery_embeddings, normalize=normalize)
    gallery_size = len(meta.gallery_identities)
    if gallery_size == 0:
        logger.warning("Empty gallery; every query is skipped.")
        return MetricsReport(0.0, 0.0, 0.0, 0.0, 0.0, evaluated=0, skipped=len(meta.query_identities))

    depth = {r: min(r, gallery_size) for r in DEFAULT_RANKS}
    accuracy, evaluated, skipped = cmc(dist, meta, sorted(set(depth.values())))
    m_ap, _, _ = mean_ap(dist, meta)

    report = MetricsReport(rank1=accuracy[depth[1]], rank5=accuracy[depth[5]], rank10=accuracy[depth[10]],
                           rank20=accuracy[depth[20]], mAP=m_ap, evaluated=evaluated, skipped=skipped)
    logger.info("Retrieval: rank-1 {:.4f}, mAP {:.4f} over {} queries ({} skipped).".format(
        report.rank1, report.mAP, report.evaluated, report.skipped))
    return report
