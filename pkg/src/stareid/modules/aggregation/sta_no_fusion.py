"""
Spatial-temporal attention without the fusion strategy: only the
score-weighted sum of every region, duplicated along depth.
"""
from stareid.fusion.fuse import weighted_pool
from stareid.modules.aggregation.sta_fusion import StaFusion


class StaWeightedSum(StaFusion):

    def get_name(self):
        return 'sta_no_fusion'

    def _pool(self, features, scores):
        return weighted_pool(features, scores)
