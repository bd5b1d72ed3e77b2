"""
STAE embeddings file.

Layout (little-endian): b"STAE", u32 version, u32 count, u32 E, then per item
u32 identity, u32 camera, u8 is_distractor and E float32 values.
"""
import logging
from collections import namedtuple

import numpy as np

from stareid.errors import FormatError
from stareid.errors import StaFileError

logger = logging.getLogger(__name__)

STAE_MAGIC = b'STAE'
STAE_VERSION = 1
_HEADER = np.dtype([('magic', 'S4'), ('version', '<u4'), ('count', '<u4'), ('width', '<u4')])

EmbeddingRecords = namedtuple('EmbeddingRecords', ['embeddings', 'identities', 'cameras', 'distractors'])


def _item_dtype(width):
    return np.dtype([('identity', '<u4'), ('camera', '<u4'), ('distractor', 'u1'), ('values', '<f4', (width, ))])


def write_embeddings(path, embeddings, identities, cameras, distractors=None):
    embeddings = np.atleast_2d(np.asarray(embeddings))
    count, width = embeddings.shape
    if distractors is None:
        distractors = np.zeros(count, dtype=bool)

    header = np.zeros((), dtype=_HEADER)
    header['magic'] = STAE_MAGIC
    header['version'] = STAE_VERSION
    header['count'] = count
    header['width'] = width

    items = np.zeros(count, dtype=_item_dtype(width))
    items['identity'] = identities
    items['camera'] = cameras
    items['distractor'] = distractors
    items['values'] = embeddings

    try:
        with open(path, 'wb') as f:
            f.write(header.tobytes())
            f.write(items.tobytes())
    except OSError as e:
        logger.error(e)
        raise StaFileError("Could not write embeddings to {}: {}".format(path, e))
    logger.debug("Wrote {} embeddings of width {} to {}.".format(count, width, path))


def read_embeddings(path):
    with open(path, 'rb') as f:
        blob = f.read()

    if len(blob) < _HEADER.itemsize:
        raise FormatError("STAE header truncated", offset=len(blob))
    header = np.frombuffer(blob, dtype=_HEADER, count=1)[0]
    if header['magic'] != STAE_MAGIC:
        raise FormatError("Bad STAE magic {!r}".format(bytes(header['magic'])), offset=0)
    if header['version'] != STAE_VERSION:
        raise FormatError("Unsupported STAE version {}".format(int(header['version'])), offset=4)

    count = int(header['count'])
    item = _item_dtype(int(header['width']))
    expected = _HEADER.itemsize + count * item.itemsize
    if len(blob) < expected:
        raise FormatError("STAE payload truncated: expected {} bytes, found {}".format(expected, len(blob)),
                          offset=len(blob))

    items = np.frombuffer(blob, dtype=item, count=count, offset=_HEADER.itemsize)
    return EmbeddingRecords(items['values'].copy(), items['identity'].astype(np.int64),
                            items['camera'].astype(np.int64), items['distractor'].astype(bool))
