"""
The trainable model: backbone, aggregator, projection head and identity
classifier, with the combined objective and its analytic gradient.

Parameters live in one flat dict (conv{i}_kernel, conv{i}_bias, head_weight,
head_bias, cls_weight, cls_bias) so the optimizer and the checkpoint treat
them uniformly.
"""
import logging

import numpy as np

from stareid.attention.sta import attention_map
from stareid.attention.sta import batch_inter_frame_reg
from stareid.attention.sta import score_matrix
from stareid.backbone.tiny import BackboneParams
from stareid.backbone.tiny import backbone_forward
from stareid.backbone.tiny import init_backbone
from stareid.errors import DimensionError
from stareid.fusion.fuse import ProjectionParams
from stareid.fusion.fuse import clip_embedding
from stareid.losses.objective import LabeledBatch
from stareid.losses.objective import LossReport
from stareid.losses.softmax import softmax_xent
from stareid.losses.triplet import batch_hard_triplet
from stareid.numerics.ops import GradPair
from stareid.numerics.ops import fully_connected
from stareid.profiles.profile import instantiate_aggregator

logger = logging.getLogger(__name__)


class StaModel:

    def __init__(self, params, aggregator, strides, k_regions):
        self.params = params
        self.aggregator = aggregator
        self.strides = tuple(strides)
        self.k_regions = k_regions

    @property
    def layers(self):
        return len(self.strides)

    @property
    def backbone(self):
        return BackboneParams([self.params['conv{}_kernel'.format(i)] for i in range(self.layers)],
                              [self.params['conv{}_bias'.format(i)] for i in range(self.layers)],
                              self.strides)

    @property
    def head(self):
        return ProjectionParams(self.params['head_weight'], self.params['head_bias'])

    @property
    def classifier(self):
        return ProjectionParams(self.params['cls_weight'], self.params['cls_bias'])

    @property
    def num_classes(self):
        return self.params['cls_bias'].shape[0]

    def features(self, clips, precomputed=False):
        """
        (B, N, H_img, W_img, 3) frames, or (B, N, H, W, D) maps when
        `precomputed`, -> feature maps. The backward returns a dict of
        backbone gradients (empty for precomputed maps).
        """
        clips = np.asarray(clips)
        if clips.ndim != 5:
            raise DimensionError("Expected a (B, N, H, W, C) batch of clips, got shape {}.".format(clips.shape))
        if precomputed:
            return GradPair(clips, lambda grad: {})

        forward = backbone_forward(clips, self.backbone)

        def backward(grad):
            d_kernels, d_biases = forward.backward(grad)
            grads = {}
            for i, (d_kernel, d_bias) in enumerate(zip(d_kernels, d_biases)):
                grads['conv{}_kernel'.format(i)] = d_kernel
                grads['conv{}_bias'.format(i)] = d_bias
            return grads

        return GradPair(forward.value, backward)

    def embed(self, clips, precomputed=False):
        """Clip embeddings (B, E): the head output, before the classifier."""
        features = self.features(clips, precomputed).value
        fused = self.aggregator.aggregate(features).value
        embeddings = clip_embedding(fused, self.head).value
        if self.aggregator.frame_level:
            embeddings = embeddings.mean(axis=1)
        return embeddings

    def scores(self, clip, precomputed=False):
        """ScoreMatrix of one (N, ...) clip."""
        features = self.features(np.asarray(clip)[None], precomputed).value[0]
        return score_matrix(features, self.k_regions)

    def loss_and_grads(self, clips, labels, pairs, cfg, precomputed=False):
        """
        One P x K batch: the LossReport and the gradient of the total
        objective for every parameter. `labels` are class indices; `pairs`
        holds one (i, j) frame pair per clip for the regularizer.
        """
        labels = np.asarray(labels)
        features = self.features(clips, precomputed)
        fused = self.aggregator.aggregate(features.value)
        embedded = clip_embedding(fused.value, self.head)

        rows = embedded.value
        row_labels = labels
        if self.aggregator.frame_level:
            frames = rows.shape[1]
            rows = rows.reshape(-1, rows.shape[-1])
            row_labels = np.repeat(labels, frames)

        logits = fully_connected(rows, self.params['cls_weight'], self.params['cls_bias'])
        batch = LabeledBatch(rows, row_labels, logits.value)

        softmax = softmax_xent(batch.logits, batch.labels, reduction=cfg.reduction)
        d_logits, = softmax.backward(1.0)
        d_rows, d_cls_weight, d_cls_bias = logits.backward(d_logits)

        l_triplet = 0.0
        active = 0
        if cfg.use_triplet:
            triplet, active = batch_hard_triplet(batch.embeddings, batch.labels, cfg.margin, reduction=cfg.reduction,
                                                 with_active=True)
            d_triplet, = triplet.backward(1.0)
            d_rows = d_rows + d_triplet
            l_triplet = triplet.value

        d_fused, head_grads = embedded.backward(d_rows.reshape(embedded.value.shape))
        d_features = fused.backward(d_fused)

        reg = 0.0
        reg_weight = cfg.reg_weight if cfg.use_reg else 0.0
        if cfg.use_reg:
            maps = attention_map(features.value)
            term = batch_inter_frame_reg(maps.value, pairs, squared=cfg.frobenius == 'squared',
                                         reduction=cfg.reduction)
            d_maps, = term.backward(reg_weight)
            d_attention, = maps.backward(d_maps)
            d_features = d_features + d_attention
            reg = term.value

        grads = {name: np.zeros_like(value) for name, value in self.params.items()}
        grads.update(features.backward(d_features))
        grads['head_weight'] = head_grads.weight
        grads['head_bias'] = head_grads.bias
        grads['cls_weight'] = d_cls_weight
        grads['cls_bias'] = d_cls_bias

        report = LossReport(l_triplet=float(l_triplet), l_softmax=float(softmax.value), reg=float(reg),
                            reg_weight=reg_weight, active_triplets=active)
        return report, grads


def init_model(cfg, num_classes, rng, dtype=np.float32):
    """Fresh parameters drawn from `rng` in a fixed order: backbone, head, classifier."""
    backbone = init_backbone(rng, cfg.channels, cfg.strides, dtype=dtype)
    params = {}
    for i, (kernel, bias) in enumerate(zip(backbone.kernels, backbone.biases)):
        params['conv{}_kernel'.format(i)] = kernel
        params['conv{}_bias'.format(i)] = bias

    fused_width = 2 * cfg.feature_dim
    params['head_weight'] = (rng.randn(fused_width, cfg.embedding_dim) / np.sqrt(fused_width)).astype(dtype)
    params['head_bias'] = np.zeros(cfg.embedding_dim, dtype=dtype)
    params['cls_weight'] = (rng.randn(cfg.embedding_dim, num_classes) / np.sqrt(cfg.embedding_dim)).astype(dtype)
    params['cls_bias'] = np.zeros(num_classes, dtype=dtype)

    aggregator = instantiate_aggregator(cfg.aggregator, k_regions=cfg.k_regions)
    logger.debug("Initialized {} model with {} parameter tensors and {} classes.".format(
        aggregator.get_name(), len(params), num_classes))
    return StaModel(params, aggregator, cfg.strides, cfg.k_regions)
