"""
Spatial-temporal attention with the fusion strategy: argmax regions (F1)
concatenated with score-weighted regions (F2).
"""
import logging

from stareid.api.module import Aggregator
from stareid.attention.sta import attention_map
from stareid.attention.sta import block_scores
from stareid.attention.sta import normalize_scores
from stareid.fusion.fuse import fuse
from stareid.numerics.ops import GradPair

logger = logging.getLogger(__name__)


class StaFusion(Aggregator):
    _DEFAULT_K_REGIONS = 4

    def __init__(self, run_parameters):
        self._k_regions = run_parameters.get('k_regions', self._DEFAULT_K_REGIONS)

    def get_name(self):
        return 'sta'

    def _pool(self, features, scores):
        return fuse(features, scores)

    def scores(self, features):
        """Chain attention_map -> block_scores -> normalize_scores; returns the GradPair of S."""
        maps = attention_map(features)
        raw = block_scores(maps.value, self._k_regions)
        normalized = normalize_scores(raw.value)

        def backward(grad):
            d_raw, = normalized.backward(grad)
            d_maps, = raw.backward(d_raw)
            d_features, = maps.backward(d_maps)
            return d_features

        return GradPair(normalized.value, backward)

    def aggregate(self, features):
        scores = self.scores(features)
        pooled = self._pool(features, scores.value)
        logger.debug("{} aggregated clips {} with {} regions.".format(
            self.get_name(), features.shape, self._k_regions))

        def backward(grad):
            d_features, d_scores = pooled.backward(grad)
            return d_features + scores.backward(d_scores)

        return GradPair(pooled.value, backward)
