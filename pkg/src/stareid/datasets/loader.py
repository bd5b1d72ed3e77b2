"""
Datasets on disk.

One directory per tracklet named <identity>_<camera>_<tracklet_id>/ holding
either ordered frame_XXXX.npy images or a single features.staf, plus a
manifest.csv at the root listing each tracklet's split (train, query,
gallery or distractor).
"""
import glob
import logging
import os
from os.path import basename, isdir, isfile, join

import numpy as np
import pandas

from stareid.backbone.feature_maps import load_feature_maps
from stareid.backbone.feature_maps import save_feature_maps
from stareid.datasets.tracklet import Tracklet
from stareid.datasets.tracklet import TrackletDataset
from stareid.errors import FormatError

logger = logging.getLogger(__name__)

MANIFEST = 'manifest.csv'
FEATURES_FILE = 'features.staf'
_SPLITS = ('train', 'query', 'gallery', 'distractor')


def _parse_name(name):
    try:
        identity, camera, tracklet_id = (int(part) for part in name.split('_'))
    except ValueError:
        raise FormatError("Tracklet directory {!r} is not <identity>_<camera>_<tracklet_id>.".format(name))
    return identity, camera, tracklet_id


def write_tracklet(tracklet, directory):
    os.makedirs(directory, exist_ok=True)
    if tracklet.precomputed:
        save_feature_maps(join(directory, FEATURES_FILE), tracklet.frames)
    else:
        for index, frame in enumerate(tracklet.frame_array):
            np.save(join(directory, 'frame_{:04d}.npy'.format(index)), frame)


def read_tracklet(directory, is_distractor=False):
    directory = directory.rstrip(os.sep)
    identity, camera, tracklet_id = _parse_name(basename(directory))
    features = join(directory, FEATURES_FILE)
    if isfile(features):
        frames = load_feature_maps(features)
    else:
        paths = sorted(glob.glob(join(directory, 'frame_*.npy')))
        if not paths:
            raise FormatError("Tracklet directory {} holds no frames.".format(directory))
        frames = np.stack([np.load(path) for path in paths])
    return Tracklet(frames, identity, camera, tracklet_id, is_distractor)


def write_dataset(dataset, root):
    os.makedirs(root, exist_ok=True)
    rows = []
    for split in ('train', 'query', 'gallery'):
        for tracklet in getattr(dataset, split):
            write_tracklet(tracklet, join(root, tracklet.name))
            rows.append({'tracklet': tracklet.name,
                         'split': 'distractor' if tracklet.is_distractor else split})

    pandas.DataFrame(rows, columns=['tracklet', 'split']).to_csv(join(root, MANIFEST), index=False)
    logger.info("Wrote {} tracklets to {}.".format(len(rows), root))


def read_dataset(root):
    fpath = join(root, MANIFEST)
    if not isdir(root) or not isfile(fpath):
        raise FileNotFoundError("No dataset manifest at {}.".format(fpath))

    manifest = pandas.read_csv(fpath, dtype={'tracklet': str, 'split': str})
    dataset = TrackletDataset()
    for row in manifest.itertuples(index=False):
        if row.split not in _SPLITS:
            raise FormatError("Unknown split {!r} for tracklet {} in {}.".format(row.split, row.tracklet, fpath))
        distractor = row.split == 'distractor'
        tracklet = read_tracklet(join(root, row.tracklet), is_distractor=distractor)
        getattr(dataset, 'gallery' if distractor else row.split).append(tracklet)

    logger.info("Read {} train / {} query / {} gallery tracklets from {}.".format(
        len(dataset.train), len(dataset.query), len(dataset.gallery), root))
    return dataset
