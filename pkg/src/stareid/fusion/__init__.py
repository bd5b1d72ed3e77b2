from stareid.fusion.fuse import ProjectionParams
from stareid.fusion.fuse import fuse
from stareid.fusion.fuse import weighted_pool
from stareid.fusion.fuse import average_pool_baseline
from stareid.fusion.fuse import frame_level_maps
from stareid.fusion.fuse import clip_embedding
