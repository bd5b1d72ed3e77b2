from stareid.backbone.feature_maps import FeatureMapSet
from stareid.backbone.feature_maps import load_feature_maps
from stareid.backbone.feature_maps import save_feature_maps
from stareid.backbone.tiny import BackboneParams
from stareid.backbone.tiny import init_backbone
from stareid.backbone.tiny import backbone_forward
from stareid.backbone.tiny import tiny_backbone_forward
