"""
Parameter-free spatial-temporal attention.

Per frame, an attention map is the per-cell squared channel energy normalized
over the map. The map is cut into K horizontal regions whose masses are the
raw block scores; each region is then normalized across the N frames, giving
the N x K score matrix S whose columns sum to one.

All functions take arrays with optional leading batch axes, shaped
(..., N, H, W, D) for features, (..., N, H, W) for maps and (..., N, K) for
scores, and return GradPairs.
"""
import logging
from dataclasses import dataclass

import numpy as np

from stareid.errors import ConfigurationError
from stareid.errors import DimensionError
from stareid.numerics.ops import GradPair

logger = logging.getLogger(__name__)

_SUM_TOLERANCE = 1e-6


def _array(x, attribute):
    return np.asarray(getattr(x, attribute, x))


@dataclass(frozen=True)
class AttentionMaps:
    """One nonnegative H x W map per frame, each summing to one."""
    maps: np.ndarray

    def __post_init__(self):
        if self.maps.ndim != 3:
            raise DimensionError("AttentionMaps needs N x H x W, got shape {}.".format(self.maps.shape))
        if np.any(self.maps < 0):
            raise ValueError("Attention maps must be nonnegative.")
        sums = self.maps.sum(axis=(1, 2))
        if np.any(np.abs(sums - 1) > _SUM_TOLERANCE):
            raise ValueError("Attention maps must sum to 1 per frame, got {}.".format(sums))


@dataclass(frozen=True)
class ScoreMatrix:
    """N x K spatial-temporal scores, every region column summing to one."""
    scores: np.ndarray

    def __post_init__(self):
        if self.scores.ndim != 2:
            raise DimensionError("ScoreMatrix needs N x K, got shape {}.".format(self.scores.shape))
        if np.any(self.scores < 0):
            raise ValueError("Scores must be nonnegative.")
        sums = self.scores.sum(axis=0)
        if np.any(np.abs(sums - 1) > _SUM_TOLERANCE):
            raise ValueError("Score columns must sum to 1, got {}.".format(sums))

    @property
    def frames(self):
        return self.scores.shape[0]

    @property
    def regions(self):
        return self.scores.shape[1]


def region_height(height, k_regions):
    if k_regions < 1:
        raise ConfigurationError("Number of regions must be >= 1, got {}.".format(k_regions))
    if height % k_regions:
        raise ConfigurationError(
            "Feature map height {} is not divisible by {} regions.".format(height, k_regions))
    return height // k_regions


def attention_map(features):
    """
    g_n(h, w) = sum_d f_n(h, w, d)^2 / sum_{h, w, d} f_n(h, w, d)^2.

    A frame with no energy at all gets the uniform map 1 / (H W).
    """
    f = _array(features, 'maps')
    if f.ndim < 4:
        raise DimensionError("attention_map needs (..., N, H, W, D), got shape {}.".format(f.shape))

    energy = np.square(f).sum(axis=-1)
    total = energy.sum(axis=(-2, -1), keepdims=True)
    empty = total == 0
    safe_total = np.where(empty, 1, total)
    cells = energy.shape[-2] * energy.shape[-1]
    maps = np.where(empty, 1.0 / cells, energy / safe_total)

    def backward(grad):
        grad = np.asarray(grad)
        # d g_c / d e_c' = (delta_cc' - g_c) / total on non-empty frames.
        projected = (grad * maps).sum(axis=(-2, -1), keepdims=True)
        d_energy = np.where(empty, 0, (grad - projected) / safe_total)
        return (2 * f * d_energy[..., None], )

    return GradPair(maps.astype(f.dtype, copy=False), backward)


def split_blocks(m, k_regions):
    """
    Cut N x H x W (or N x H x W x D) into K horizontal blocks, each covering
    rows [H_s k, H_s (k + 1)) of every frame, all columns and channels.
    """
    m = np.asarray(m)
    if m.ndim not in (3, 4):
        raise DimensionError("split_blocks needs N x H x W or N x H x W x D, got shape {}.".format(m.shape))
    rows = region_height(m.shape[1], k_regions)
    return [m[:, k * rows:(k + 1) * rows] for k in range(k_regions)]


def block_scores(maps, k_regions):
    """Raw score s_{n,k}: the attention mass of region k in frame n."""
    g = _array(maps, 'maps')
    if g.ndim < 3:
        raise DimensionError("block_scores needs (..., N, H, W), got shape {}.".format(g.shape))

    height, width = g.shape[-2:]
    rows = region_height(height, k_regions)
    blocks = g.reshape(g.shape[:-2] + (k_regions, rows, width))
    # Entries are nonnegative, so the l1 norm of a block is its sum.
    raw = np.abs(blocks).sum(axis=(-2, -1))

    def backward(grad):
        grad = np.asarray(grad)[..., None, None] * np.sign(blocks)
        return (grad.reshape(g.shape), )

    return GradPair(raw, backward)


def normalize_scores(raw):
    """S(n, k) = s_{n,k} / sum_n s_{n,k}; an all-zero column becomes uniform 1 / N."""
    raw = _array(raw, 'scores')
    if raw.ndim < 2:
        raise DimensionError("normalize_scores needs (..., N, K), got shape {}.".format(raw.shape))

    frames = raw.shape[-2]
    column = raw.sum(axis=-2, keepdims=True)
    empty = column == 0
    safe_column = np.where(empty, 1, column)
    scores = np.where(empty, 1.0 / frames, raw / safe_column)

    def backward(grad):
        grad = np.asarray(grad)
        projected = (grad * scores).sum(axis=-2, keepdims=True)
        return (np.where(empty, 0, (grad - projected) / safe_column), )

    return GradPair(scores.astype(raw.dtype, copy=False), backward)


def score_matrix(features, k_regions):
    """attention_map -> block_scores -> normalize_scores for a single clip."""
    maps = attention_map(features).value
    raw = block_scores(maps, k_regions).value
    return ScoreMatrix(normalize_scores(raw).value)


def _pair_distance(g, first, second, squared):
    """Frobenius distance between maps `first` and `second` of each clip in g (..., N, H, W)."""
    first = np.asarray(first)
    second = np.asarray(second)
    frames = g.shape[-3]
    lead = g.shape[:-3]
    if np.any(first == second):
        raise ValueError("Inter-frame regularization needs two distinct frames.")
    if np.any((first < 0) | (first >= frames) | (second < 0) | (second >= frames)):
        raise ValueError("Frame pair outside [0, {}).".format(frames))

    g_first = np.take_along_axis(g, first.reshape(lead + (1, 1, 1)), axis=-3)[..., 0, :, :]
    g_second = np.take_along_axis(g, second.reshape(lead + (1, 1, 1)), axis=-3)[..., 0, :, :]
    diff = g_first - g_second
    square_sum = np.square(diff).sum(axis=(-2, -1))
    reg = square_sum if squared else np.sqrt(square_sum)

    def backward(grad):
        grad = np.asarray(grad)
        if squared:
            d_diff = 2 * diff * grad[..., None, None]
        else:
            safe = np.where(reg > 0, reg, 1)
            d_diff = np.where((reg > 0)[..., None, None], diff / safe[..., None, None], 0) * grad[..., None, None]
        onehot = np.arange(frames)
        weight = ((onehot == first.reshape(lead + (1, ))).astype(g.dtype)
                  - (onehot == second.reshape(lead + (1, ))).astype(g.dtype))
        return (weight[..., None, None] * d_diff[..., None, :, :], )

    return GradPair(reg, backward)


def inter_frame_reg(maps, pair, squared=False):
    """
    Reg = || g_i - g_j ||_F for one clip's N x H x W maps. With `squared` the
    square root is dropped.
    """
    g = _array(maps, 'maps')
    if g.ndim != 3:
        raise DimensionError("inter_frame_reg needs N x H x W maps, got shape {}.".format(g.shape))
    i, j = pair
    inner = _pair_distance(g, np.int64(i), np.int64(j), squared)

    def backward(grad):
        return inner.backward(np.asarray(grad))

    return GradPair(float(inner.value), backward)


def batch_inter_frame_reg(maps, pairs, squared=False, reduction='sum'):
    """One regularization pair per clip of (B, N, H, W) maps, reduced over the batch."""
    g = np.asarray(maps)
    pairs = np.asarray(pairs)
    if g.ndim != 4 or pairs.shape != (g.shape[0], 2):
        raise DimensionError(
            "batch_inter_frame_reg needs (B, N, H, W) maps and (B, 2) pairs, got {} and {}.".format(
                g.shape, pairs.shape))
    inner = _pair_distance(g, pairs[:, 0], pairs[:, 1], squared)
    scale = 1.0 / g.shape[0] if reduction == 'mean' else 1.0

    def backward(grad):
        return inner.backward(np.full(g.shape[0], grad * scale))

    return GradPair(float(inner.value.sum() * scale), backward)
