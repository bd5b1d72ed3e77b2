"""
Tracklets, the unit of retrieval, and clip sampling from them.
"""
import logging
from dataclasses import dataclass
from dataclasses import field

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class Tracklet:
    """
    Ordered frames of one person seen by one camera. `frames` is either a
    T x H x W x 3 image stack or a FeatureMapSet of precomputed maps.
    """
    frames: object
    identity: int
    camera: int
    tracklet_id: int = 0
    is_distractor: bool = False

    def __post_init__(self):
        if len(self) < 1:
            raise ValueError("Tracklet {} has no frames.".format(self.tracklet_id))
        if self.identity < 0 or self.camera < 0:
            raise ValueError("Tracklet identity and camera must be nonnegative, got {} and {}.".format(
                self.identity, self.camera))

    @property
    def frame_array(self):
        return np.asarray(getattr(self.frames, 'maps', self.frames))

    @property
    def precomputed(self):
        return hasattr(self.frames, 'maps')

    @property
    def name(self):
        return '{}_{}_{}'.format(self.identity, self.camera, self.tracklet_id)

    def __len__(self):
        return len(self.frame_array)


@dataclass
class TrackletDataset:
    train: list = field(default_factory=list)
    query: list = field(default_factory=list)
    gallery: list = field(default_factory=list)

    @property
    def train_identities(self):
        return sorted({t.identity for t in self.train})


def sample_frame_indices(length, n, rng):
    """
    n frame indices in temporal order: without replacement when the tracklet
    is long enough, with replacement otherwise.
    """
    if length < 1:
        raise ValueError("Cannot sample frames from an empty tracklet.")
    if n < 1:
        raise ValueError("Clip length must be >= 1, got {}.".format(n))
    return np.sort(rng.choice(length, size=n, replace=length < n))


def evenly_spaced_indices(length, n):
    if length < 1:
        raise ValueError("Cannot sample frames from an empty tracklet.")
    if n < 1:
        raise ValueError("Clip length must be >= 1, got {}.".format(n))
    return np.round(np.linspace(0, length - 1, n)).astype(int)


def sample_frames(tracklet, n, rng):
    indices = sample_frame_indices(len(tracklet), n, rng)
    return tracklet.frame_array[indices]


def query_gallery_split(tracklets):
    """
    Per identity, the first tracklet seen by camera 0 (or its first tracklet)
    becomes the query; everything else, distractors included, is gallery.
    """
    by_identity = {}
    for tracklet in tracklets:
        if not tracklet.is_distractor:
            by_identity.setdefault(tracklet.identity, []).append(tracklet)

    queries = []
    for identity in sorted(by_identity):
        candidates = by_identity[identity]
        on_first_camera = [t for t in candidates if t.camera == 0]
        queries.append((on_first_camera or candidates)[0])

    query_ids = {id(t) for t in queries}
    gallery = [t for t in tracklets if id(t) not in query_ids]
    return queries, gallery
