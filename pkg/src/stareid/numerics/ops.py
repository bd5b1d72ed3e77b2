"""
Dense tensor primitives with hand-written backward passes.

Tensors are plain numpy arrays, channels last. Every differentiable operation
returns a GradPair: the forward value plus a closure mapping the upstream
gradient to the gradients of the inputs, in argument order. Operations accept
optional leading batch axes; each item is processed exactly as it would be on
its own.
"""
import logging
from collections import namedtuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from stareid.errors import DimensionError

logger = logging.getLogger(__name__)

GradPair = namedtuple('GradPair', ['value', 'backward'])


def conv_output_size(size, kernel_size, stride, pad, axis='height'):
    if kernel_size < 1 or stride < 1 or pad < 0:
        raise DimensionError(
            "conv2d needs k >= 1, stride >= 1, pad >= 0; got k={}, stride={}, pad={}."
            .format(kernel_size, stride, pad))

    span = size + 2 * pad - kernel_size
    if span < 0 or span % stride != 0:
        raise DimensionError(
            "conv2d {} axis: ({} + 2*{} - {}) is not a nonnegative multiple of stride {}."
            .format(axis, size, pad, kernel_size, stride))

    return span // stride + 1


def conv2d(x, kernel, bias, stride=1, pad=0):
    """
    Cross-correlation of an HxWxC_in input (or a BxHxWxC_in batch) with a
    k x k x C_in x C_out kernel, zero padding `pad` on both spatial sides.
    """
    x = np.asarray(x)
    if x.ndim not in (3, 4):
        raise DimensionError(
            "conv2d input must be HxWxC or BxHxWxC, got shape {}.".format(x.shape))
    if kernel.ndim != 4 or kernel.shape[0] != kernel.shape[1]:
        raise DimensionError(
            "conv2d kernel must be k x k x C_in x C_out, got shape {}.".format(kernel.shape))

    single = x.ndim == 3
    if single:
        x = x[None]

    k, _, c_in, c_out = kernel.shape
    if x.shape[-1] != c_in:
        raise DimensionError(
            "conv2d channel axis: input has {} channels, kernel expects {}.".format(x.shape[-1], c_in))
    if bias.shape != (c_out, ):
        raise DimensionError(
            "conv2d bias axis: expected ({},), got {}.".format(c_out, bias.shape))

    _, height, width, _ = x.shape
    out_h = conv_output_size(height, k, stride, pad, 'height')
    out_w = conv_output_size(width, k, stride, pad, 'width')

    padded = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0))) if pad else x
    # (B, H', W', C_in, k, k)
    patches = sliding_window_view(padded, (k, k), axis=(1, 2))[:, ::stride, ::stride]
    out = np.tensordot(patches, kernel, axes=([3, 4, 5], [2, 0, 1])) + bias

    def backward(grad):
        grad = np.asarray(grad)
        if single:
            grad = grad[None]

        d_kernel = np.tensordot(patches, grad, axes=([0, 1, 2], [0, 1, 2])).transpose(1, 2, 0, 3)
        d_bias = grad.sum(axis=(0, 1, 2))

        # (B, H', W', k, k, C_in)
        d_patches = np.tensordot(grad, kernel, axes=([3], [3]))
        d_padded = np.zeros(padded.shape, dtype=np.result_type(padded, grad))
        row_stop = stride * (out_h - 1) + 1
        col_stop = stride * (out_w - 1) + 1
        for i in range(k):
            for j in range(k):
                d_padded[:, i:i + row_stop:stride, j:j + col_stop:stride, :] += d_patches[:, :, :, i, j, :]

        d_x = d_padded[:, pad:pad + height, pad:pad + width, :]
        if single:
            d_x = d_x[0]
        return d_x, d_kernel, d_bias

    return GradPair(out[0] if single else out, backward)


def relu(x):
    x = np.asarray(x)
    positive = x > 0

    def backward(grad):
        return (grad * positive, )

    return GradPair(np.maximum(x, 0), backward)


def global_avg_pool(x):
    """Mean over the two spatial axes of (..., H, W, C)."""
    x = np.asarray(x)
    if x.ndim < 3:
        raise DimensionError(
            "global_avg_pool needs (..., H, W, C), got shape {}.".format(x.shape))

    cells = x.shape[-3] * x.shape[-2]

    def backward(grad):
        grad = np.asarray(grad)[..., None, None, :] / cells
        return (np.broadcast_to(grad, x.shape).copy(), )

    return GradPair(x.mean(axis=(-3, -2)), backward)


def fully_connected(x, weight, bias):
    """out = x W + b over the last axis of x."""
    x = np.asarray(x)
    if weight.ndim != 2 or x.shape[-1] != weight.shape[0]:
        raise DimensionError(
            "fully_connected input feature axis: input width {} does not match weight shape {}."
            .format(x.shape[-1], weight.shape))
    if bias.shape != (weight.shape[1], ):
        raise DimensionError(
            "fully_connected output axis: bias shape {} does not match weight shape {}."
            .format(bias.shape, weight.shape))

    def backward(grad):
        grad = np.asarray(grad)
        flat_x = x.reshape(-1, weight.shape[0])
        flat_grad = grad.reshape(-1, weight.shape[1])
        return grad @ weight.T, flat_x.T @ flat_grad, flat_grad.sum(axis=0)

    return GradPair(x @ weight + bias, backward)
