"""
No temporal aggregation: frames are embedded one by one, as an image-based
model would, and averaged only at test time.
"""
from stareid.api.module import Aggregator
from stareid.fusion.fuse import frame_level_maps
from stareid.numerics.ops import GradPair


class FrameLevel(Aggregator):
    frame_level = True

    def __init__(self, run_parameters):
        pass

    def get_name(self):
        return 'none'

    def aggregate(self, features):
        maps = frame_level_maps(features)
        return GradPair(maps.value, lambda grad: maps.backward(grad)[0])
