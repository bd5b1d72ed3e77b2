"""
Temporal average pooling of the frame feature maps.
"""
from stareid.api.module import Aggregator
from stareid.fusion.fuse import average_pool_baseline
from stareid.numerics.ops import GradPair


class AveragePooling(Aggregator):

    def __init__(self, run_parameters):
        pass

    def get_name(self):
        return 'average'

    def aggregate(self, features):
        pooled = average_pool_baseline(features)
        return GradPair(pooled.value, lambda grad: pooled.backward(grad)[0])
