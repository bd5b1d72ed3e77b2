"""
Clip-level feature fusion.

For every region k the fused map carries two halves along depth:
  F1 - the region copied verbatim from the frame with the highest score S(n, k)
       (lowest frame index on ties), the discriminative part;
  F2 - the score-weighted sum of that region over all frames, the global part.
The selection in F1 is held constant in the backward pass.
"""
import logging
from collections import namedtuple

import numpy as np

from stareid.attention.sta import region_height
from stareid.errors import DimensionError
from stareid.numerics.ops import GradPair
from stareid.numerics.ops import fully_connected
from stareid.numerics.ops import global_avg_pool

logger = logging.getLogger(__name__)

ProjectionParams = namedtuple('ProjectionParams', ['weight', 'bias'])


def _check_scores(f, scores):
    if f.ndim < 4:
        raise DimensionError("Fusion needs (..., N, H, W, D) features, got shape {}.".format(f.shape))
    if scores.shape[:-1] != f.shape[:-3]:
        raise DimensionError(
            "Fusion frame axis: scores {} do not match features {}.".format(scores.shape, f.shape))
    return region_height(f.shape[-3], scores.shape[-1])


def _regions(f, k_regions, rows):
    """(..., N, H, W, D) -> (..., N, K, H_s, W, D)."""
    return f.reshape(f.shape[:-3] + (k_regions, rows) + f.shape[-2:])


def _merge_regions(blocks):
    """(..., K, H_s, W, D) -> (..., H, W, D)."""
    return blocks.reshape(blocks.shape[:-4] + (blocks.shape[-4] * blocks.shape[-3], ) + blocks.shape[-2:])


def fuse(features, scores):
    """Depth concatenation of F1 (argmax regions) and F2 (score-weighted regions)."""
    f = np.asarray(getattr(features, 'maps', features))
    S = np.asarray(getattr(scores, 'scores', scores))
    rows = _check_scores(f, S)
    k_regions = S.shape[-1]
    frames = f.shape[-4]

    blocks = _regions(f, k_regions, rows)
    selected = np.argmax(S, axis=-2)
    onehot = (np.arange(frames)[:, None] == selected[..., None, :]).astype(f.dtype)
    weights = S[..., None, None, None]

    first = _merge_regions((blocks * onehot[..., None, None, None]).sum(axis=-5))
    second = _merge_regions((blocks * weights).sum(axis=-5))
    depth = f.shape[-1]

    def backward(grad):
        grad = np.asarray(grad)
        g_first = _regions(grad[..., :depth], k_regions, rows)[..., None, :, :, :, :]
        g_second = _regions(grad[..., depth:], k_regions, rows)[..., None, :, :, :, :]
        d_blocks = onehot[..., None, None, None] * g_first + weights * g_second
        d_scores = (blocks * g_second).sum(axis=(-3, -2, -1))
        return d_blocks.reshape(f.shape), d_scores

    return GradPair(np.concatenate([first, second], axis=-1), backward)


def weighted_pool(features, scores):
    """F2 alone, duplicated along depth: attention without the fusion strategy."""
    f = np.asarray(getattr(features, 'maps', features))
    S = np.asarray(getattr(scores, 'scores', scores))
    rows = _check_scores(f, S)
    k_regions = S.shape[-1]

    blocks = _regions(f, k_regions, rows)
    weights = S[..., None, None, None]
    pooled = _merge_regions((blocks * weights).sum(axis=-5))
    depth = f.shape[-1]

    def backward(grad):
        grad = np.asarray(grad)
        g_pooled = grad[..., :depth] + grad[..., depth:]
        g_blocks = _regions(g_pooled, k_regions, rows)[..., None, :, :, :, :]
        return (weights * g_blocks).reshape(f.shape), (blocks * g_blocks).sum(axis=(-3, -2, -1))

    return GradPair(np.concatenate([pooled, pooled], axis=-1), backward)


def average_pool_baseline(features):
    """Per-cell mean over frames, duplicated along depth to match the fused width."""
    f = np.asarray(getattr(features, 'maps', features))
    if f.ndim < 4:
        raise DimensionError("average_pool_baseline needs (..., N, H, W, D), got shape {}.".format(f.shape))
    frames = f.shape[-4]
    mean = f.mean(axis=-4)
    depth = f.shape[-1]

    def backward(grad):
        grad = np.asarray(grad)
        g_mean = (grad[..., :depth] + grad[..., depth:]) / frames
        return (np.broadcast_to(g_mean[..., None, :, :, :], f.shape).copy(), )

    return GradPair(np.concatenate([mean, mean], axis=-1), backward)


def frame_level_maps(features):
    """Every frame on its own, duplicated along depth; the image-based baseline."""
    f = np.asarray(getattr(features, 'maps', features))
    depth = f.shape[-1]

    def backward(grad):
        grad = np.asarray(grad)
        return (grad[..., :depth] + grad[..., depth:], )

    return GradPair(np.concatenate([f, f], axis=-1), backward)


def clip_embedding(fused, head):
    """Global average pooling followed by the projection head; no nonlinearity after it."""
    fused = np.asarray(fused)
    if fused.shape[-1] != head.weight.shape[0]:
        raise DimensionError(
            "clip_embedding depth axis: fused width {} does not match head input {}.".format(
                fused.shape[-1], head.weight.shape[0]))

    pooled = global_avg_pool(fused)
    projected = fully_connected(pooled.value, head.weight, head.bias)

    def backward(grad):
        d_pooled, d_weight, d_bias = projected.backward(grad)
        d_fused, = pooled.backward(d_pooled)
        return d_fused, ProjectionParams(d_weight, d_bias)

    return GradPair(projected.value, backward)
