"""
Per-clip feature maps and their STAF file format.

STAF layout (little-endian): b"STAF", u32 version, u32 N, H, W, D, then
N*H*W*D float32 values in (n, h, w, d) order.
"""
import logging
from dataclasses import dataclass

import numpy as np

from stareid.errors import DimensionError
from stareid.errors import FormatError

logger = logging.getLogger(__name__)

STAF_MAGIC = b'STAF'
STAF_VERSION = 1
_HEADER = np.dtype([('magic', 'S4'), ('version', '<u4'), ('shape', '<u4', (4, ))])


@dataclass(frozen=True)
class FeatureMapSet:
    """N nonnegative H x W x D feature maps of one clip."""
    maps: np.ndarray
    # Number of negative values zeroed when the maps were loaded.
    clamped: int = 0

    def __post_init__(self):
        maps = self.maps
        if maps.ndim != 4 or min(maps.shape) < 1:
            raise DimensionError(
                "FeatureMapSet needs N x H x W x D with every axis >= 1, got shape {}.".format(maps.shape))
        if np.any(maps < 0):
            raise ValueError("FeatureMapSet values must be nonnegative (post-ReLU).")

    @property
    def shape(self):
        return self.maps.shape


def save_feature_maps(path, feature_maps):
    maps = np.ascontiguousarray(feature_maps.maps, dtype='<f4')
    header = np.zeros((), dtype=_HEADER)
    header['magic'] = STAF_MAGIC
    header['version'] = STAF_VERSION
    header['shape'] = maps.shape
    with open(path, 'wb') as f:
        f.write(header.tobytes())
        f.write(maps.tobytes())
    logger.debug("Wrote feature maps {} to {}.".format(maps.shape, path))


def load_feature_maps(path):
    with open(path, 'rb') as f:
        blob = f.read()

    if len(blob) < _HEADER.itemsize:
        raise FormatError("STAF header truncated: {} of {} bytes".format(len(blob), _HEADER.itemsize),
                          offset=len(blob))
    header = np.frombuffer(blob, dtype=_HEADER, count=1)[0]
    if header['magic'] != STAF_MAGIC:
        raise FormatError("Bad STAF magic {!r}".format(bytes(header['magic'])), offset=0)
    if header['version'] != STAF_VERSION:
        raise FormatError("Unsupported STAF version {}".format(int(header['version'])), offset=4)

    shape = tuple(int(s) for s in header['shape'])
    count = int(np.prod(shape))
    expected = _HEADER.itemsize + 4 * count
    if len(blob) < expected:
        raise FormatError("STAF payload truncated: expected {} bytes, found {}".format(expected, len(blob)),
                          offset=len(blob))

    maps = np.frombuffer(blob, dtype='<f4', count=count, offset=_HEADER.itemsize).reshape(shape)
    negatives = int(np.count_nonzero(maps < 0))
    if negatives:
        logger.warning("Clamped {} negative values to 0 in {}.".format(negatives, path))
        maps = np.maximum(maps, 0)

    return FeatureMapSet(maps.copy(), clamped=negatives)
