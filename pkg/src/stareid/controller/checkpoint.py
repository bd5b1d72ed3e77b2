"""
STAC training checkpoints.

Layout (little-endian):
  b"STAC", u32 version, u32 tensor count
  per tensor: u32 name length, utf-8 name, u32 rank, u32 dims[rank], float32 payload
  RNG state: u32 keys[624], u32 pos, u32 has_gauss, f64 cached_gaussian
  optimizer: u32 step, u32 epoch, f64 beta1, beta2, eps, weight_decay
  u32 length, utf-8 JSON with the configuration echo, class identities and loss history

Parameters are stored under "param/<name>", Adam moments under
"adam_m/<name>" and "adam_v/<name>".
"""
import json
import logging
from dataclasses import dataclass
from dataclasses import field

import numpy as np

from stareid.errors import FormatError
from stareid.errors import StaFileError
from stareid.errors import VersionError
from stareid.optim.adam import AdamState

logger = logging.getLogger(__name__)

STAC_MAGIC = b'STAC'
STAC_VERSION = 1
_HEADER = np.dtype([('magic', 'S4'), ('version', '<u4'), ('tensors', '<u4')])
_RNG = np.dtype([('keys', '<u4', (624, )), ('pos', '<u4'), ('has_gauss', '<u4'), ('cached', '<f8')])
_OPTIMIZER = np.dtype([('step', '<u4'), ('epoch', '<u4'), ('beta1', '<f8'), ('beta2', '<f8'), ('eps', '<f8'),
                       ('weight_decay', '<f8')])
_U32 = np.dtype('<u4')

# Keys that define the model; a checkpoint only runs under matching values.
_MODEL_KEYS = ('aggregator', 'k_regions', 'hidden_channels', 'strides', 'feature_dim', 'embedding_dim')
# Keys that may change between training and evaluation or between resumed runs.
_FREE_KEYS = ('epochs', 'checkpoint_every', 'checkpoint_path', 'output_dir', 'lr_milestones', 'test_frames',
              'test_sampling', 'test_repeats', 'normalize_embeddings')


@dataclass
class Checkpoint:
    params: dict
    adam: AdamState
    rng_state: tuple
    epoch: int = 0
    config: dict = field(default_factory=dict)
    classes: list = field(default_factory=list)
    history: list = field(default_factory=list)


def _tensor_bytes(name, value):
    encoded = name.encode('utf-8')
    value = np.ascontiguousarray(value, dtype='<f4')
    return b''.join([
        np.array(len(encoded), dtype=_U32).tobytes(),
        encoded,
        np.array(value.ndim, dtype=_U32).tobytes(),
        np.array(value.shape, dtype=_U32).tobytes(),
        value.tobytes(),
    ])


def checkpoint_bytes(checkpoint):
    tensors = []
    for name in sorted(checkpoint.params):
        tensors.append(('param/' + name, checkpoint.params[name]))
    for name in sorted(checkpoint.adam.first_moment):
        tensors.append(('adam_m/' + name, checkpoint.adam.first_moment[name]))
        tensors.append(('adam_v/' + name, checkpoint.adam.second_moment[name]))

    header = np.zeros((), dtype=_HEADER)
    header['magic'] = STAC_MAGIC
    header['version'] = STAC_VERSION
    header['tensors'] = len(tensors)

    _, keys, pos, has_gauss, cached = checkpoint.rng_state
    rng = np.zeros((), dtype=_RNG)
    rng['keys'] = keys
    rng['pos'] = pos
    rng['has_gauss'] = has_gauss
    rng['cached'] = cached

    adam = checkpoint.adam
    optimizer = np.zeros((), dtype=_OPTIMIZER)
    optimizer['step'] = adam.step
    optimizer['epoch'] = checkpoint.epoch
    optimizer['beta1'] = adam.beta1
    optimizer['beta2'] = adam.beta2
    optimizer['eps'] = adam.eps
    optimizer['weight_decay'] = adam.weight_decay

    trailer = json.dumps({'config': checkpoint.config, 'classes': [int(c) for c in checkpoint.classes],
                          'history': checkpoint.history}, sort_keys=True).encode('utf-8')

    parts = [header.tobytes()]
    parts.extend(_tensor_bytes(name, value) for name, value in tensors)
    parts.extend([rng.tobytes(), optimizer.tobytes(), np.array(len(trailer), dtype=_U32).tobytes(), trailer])
    return b''.join(parts)


def save_checkpoint(path, checkpoint):
    try:
        with open(path, 'wb') as f:
            f.write(checkpoint_bytes(checkpoint))
    except OSError as e:
        logger.error(e)
        raise StaFileError("Could not write checkpoint to {}: {}".format(path, e))
    logger.info("Saved checkpoint at epoch {} to {}.".format(checkpoint.epoch, path))


class _Cursor:

    def __init__(self, blob):
        self._blob = blob
        self.offset = 0

    def take(self, dtype, count=1, what='record'):
        dtype = np.dtype(dtype)
        size = dtype.itemsize * count
        if self.offset + size > len(self._blob):
            raise FormatError("STAC {} truncated: need {} bytes, {} left".format(
                what, size, len(self._blob) - self.offset), offset=self.offset)
        values = np.frombuffer(self._blob, dtype=dtype, count=count, offset=self.offset)
        self.offset += size
        return values

    def take_bytes(self, size, what):
        return self.take('u1', size, what).tobytes()


def load_checkpoint(path):
    with open(path, 'rb') as f:
        cursor = _Cursor(f.read())

    header = cursor.take(_HEADER, what='header')[0]
    if header['magic'] != STAC_MAGIC:
        raise FormatError("Bad STAC magic {!r}".format(bytes(header['magic'])), offset=0)
    if header['version'] != STAC_VERSION:
        raise FormatError("Unsupported STAC version {}".format(int(header['version'])), offset=4)

    tensors = {}
    for _ in range(int(header['tensors'])):
        length = int(cursor.take(_U32, what='tensor name length')[0])
        start = cursor.offset
        try:
            name = cursor.take_bytes(length, 'tensor name').decode('utf-8')
        except UnicodeDecodeError:
            raise FormatError("STAC tensor name is not utf-8", offset=start)
        rank = int(cursor.take(_U32, what='tensor rank')[0])
        shape = tuple(int(d) for d in cursor.take(_U32, rank, 'tensor dims'))
        values = cursor.take('<f4', int(np.prod(shape)), 'tensor {}'.format(name))
        tensors[name] = values.reshape(shape).astype(np.float32)

    rng = cursor.take(_RNG, what='RNG state')[0]
    optimizer = cursor.take(_OPTIMIZER, what='optimizer state')[0]
    length = int(cursor.take(_U32, what='trailer length')[0])
    start = cursor.offset
    try:
        trailer = json.loads(cursor.take_bytes(length, 'trailer').decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise FormatError("STAC trailer is not JSON", offset=start)

    def group(prefix):
        return {name[len(prefix):]: value for name, value in tensors.items() if name.startswith(prefix)}

    adam = AdamState(group('adam_m/'), group('adam_v/'), step=int(optimizer['step']),
                     beta1=float(optimizer['beta1']), beta2=float(optimizer['beta2']), eps=float(optimizer['eps']),
                     weight_decay=float(optimizer['weight_decay']))
    rng_state = ('MT19937', rng['keys'].astype(np.uint32), int(rng['pos']), int(rng['has_gauss']),
                 float(rng['cached']))
    checkpoint = Checkpoint(group('param/'), adam, rng_state, epoch=int(optimizer['epoch']),
                            config=trailer.get('config', {}), classes=trailer.get('classes', []),
                            history=trailer.get('history', []))
    logger.debug("Loaded checkpoint at epoch {} with {} tensors from {}.".format(
        checkpoint.epoch, len(tensors), path))
    return checkpoint


def check_compatible(checkpoint, cfg, resume=False):
    """
    Raise VersionError unless `checkpoint` fits `cfg`: the model-defining keys must
    agree, and a resumed run must share every training setting.
    """
    current = cfg.to_dict()
    keys = _MODEL_KEYS
    if resume:
        keys = tuple(key for key in current if key not in _FREE_KEYS)

    for key in keys:
        if key in checkpoint.config and checkpoint.config[key] != current[key]:
            raise VersionError("Checkpoint was trained with {}={!r}, configuration has {!r}.".format(
                key, checkpoint.config[key], current[key]))

    if resume and checkpoint.epoch > cfg.epochs:
        raise VersionError("Checkpoint is at epoch {}, past the configured {} epochs.".format(
            checkpoint.epoch, cfg.epochs))
