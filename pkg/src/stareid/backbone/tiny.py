"""
Desk-scale convolutional backbone: a stack of conv/ReLU layers turning
H_img x W_img x 3 frames into nonnegative H x W x D feature maps.

With the default 32 x 16 frames and strides (1, 2, 1) the output is 16 x 8,
the spatial size the attention split assumes.
"""
import logging
from dataclasses import dataclass
from dataclasses import field

import numpy as np

from stareid.backbone.feature_maps import FeatureMapSet
from stareid.errors import ConfigurationError
from stareid.numerics.ops import GradPair
from stareid.numerics.ops import conv2d
from stareid.numerics.ops import relu

logger = logging.getLogger(__name__)

_DEFAULT_CHANNELS = (16, 32, 32)
_DEFAULT_STRIDES = (1, 2, 1)
_DEFAULT_KERNEL_SIZE = 3
_DEFAULT_INPUT_MEAN = (0.5, 0.5, 0.5)
_DEFAULT_INPUT_STD = (0.25, 0.25, 0.25)


@dataclass
class BackboneParams:
    kernels: list
    biases: list
    strides: tuple = _DEFAULT_STRIDES
    # Fixed per-channel affine applied to the frames; never trained.
    input_mean: np.ndarray = field(default_factory=lambda: np.array(_DEFAULT_INPUT_MEAN))
    input_std: np.ndarray = field(default_factory=lambda: np.array(_DEFAULT_INPUT_STD))

    def __post_init__(self):
        if not (len(self.kernels) == len(self.biases) == len(self.strides)) or not self.kernels:
            raise ConfigurationError(
                "Backbone needs one kernel, bias and stride per layer; got {}, {}, {}.".format(
                    len(self.kernels), len(self.biases), len(self.strides)))

        in_channels = 3
        for layer, (kernel, bias) in enumerate(zip(self.kernels, self.biases)):
            if kernel.ndim != 4 or kernel.shape[2] != in_channels or bias.shape != (kernel.shape[3], ):
                raise ConfigurationError(
                    "Backbone layer {}: kernel {} / bias {} do not follow {} input channels.".format(
                        layer, kernel.shape, bias.shape, in_channels))
            in_channels = kernel.shape[3]

    @property
    def out_channels(self):
        return self.kernels[-1].shape[3]

    @property
    def total_stride(self):
        return int(np.prod(self.strides))

    def output_size(self, image_height, image_width):
        stride = self.total_stride
        if image_height % stride or image_width % stride:
            raise ConfigurationError(
                "Frames of {}x{} do not divide by the backbone stride {}.".format(
                    image_height, image_width, stride))
        return image_height // stride, image_width // stride


def layer_padding(kernel_size, stride):
    """Padding that keeps H / stride exact: k=3 for stride 1, k=2s for stride s."""
    return max(0, (kernel_size - stride) // 2)


def init_backbone(rng, channels=_DEFAULT_CHANNELS, strides=_DEFAULT_STRIDES,
                  kernel_size=_DEFAULT_KERNEL_SIZE, dtype=np.float64):
    """
    He-normal kernels, zero biases. Stride-1 layers use `kernel_size`, strided
    layers a 2s x 2s kernel so the output size stays a whole number.
    """
    if len(channels) != len(strides):
        raise ConfigurationError(
            "Backbone channels {} and strides {} differ in length.".format(channels, strides))

    kernels = []
    biases = []
    in_channels = 3
    for out_channels, stride in zip(channels, strides):
        size = kernel_size if stride == 1 else 2 * stride
        fan_in = size * size * in_channels
        kernel = rng.randn(size, size, in_channels, out_channels) * np.sqrt(2.0 / fan_in)
        kernels.append(kernel.astype(dtype))
        biases.append(np.zeros(out_channels, dtype=dtype))
        in_channels = out_channels

    return BackboneParams(kernels, biases, tuple(strides))


def backbone_forward(frames, params):
    """
    Training path: frames (..., H_img, W_img, 3) -> feature maps (..., H, W, D).

    The backward closure returns (kernel gradients, bias gradients), one entry
    per layer.
    """
    frames = np.asarray(frames)
    if frames.ndim < 3 or frames.shape[-1] != 3:
        raise ConfigurationError("Backbone expects (..., H, W, 3) frames, got shape {}.".format(frames.shape))

    lead = frames.shape[:-3]
    x = frames.reshape((-1, ) + frames.shape[-3:])
    x = ((x - params.input_mean) / params.input_std).astype(frames.dtype, copy=False)

    tape = []
    for kernel, bias, stride in zip(params.kernels, params.biases, params.strides):
        pad = layer_padding(kernel.shape[0], stride)
        conv = conv2d(x, kernel, bias, stride=stride, pad=pad)
        act = relu(conv.value)
        tape.append((conv, act))
        x = act.value

    out = x.reshape(lead + x.shape[1:])

    def backward(grad):
        grad = np.asarray(grad).reshape(x.shape)
        d_kernels = []
        d_biases = []
        for conv, act in reversed(tape):
            grad, = act.backward(grad)
            grad, d_kernel, d_bias = conv.backward(grad)
            d_kernels.append(d_kernel)
            d_biases.append(d_bias)
        return d_kernels[::-1], d_biases[::-1]

    return GradPair(out, backward)


def tiny_backbone_forward(frames, params):
    """N x H_img x W_img x 3 frames in [0, 1] -> FeatureMapSet (final ReLU, so >= 0)."""
    frames = np.asarray(frames)
    if frames.ndim != 4:
        raise ConfigurationError("Expected N x H x W x 3 frames, got shape {}.".format(frames.shape))
    return FeatureMapSet(backbone_forward(frames, params).value)
