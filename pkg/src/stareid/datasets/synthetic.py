"""
Synthetic occluded tracklets for desk-scale experiments.

Every identity gets a prototype image made of colored horizontal bands with a
fixed texture. A frame is the prototype shifted by a small pose offset, plus
Gaussian noise, seen through its camera's color gain, and with some
probability covered by a gray band over a horizontal stripe.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import shift

from stareid.datasets.tracklet import Tracklet
from stareid.datasets.tracklet import TrackletDataset
from stareid.datasets.tracklet import query_gallery_split
from stareid.errors import ConfigurationError

logger = logging.getLogger(__name__)

_OCCLUSION_GRAY = 0.5


@dataclass(frozen=True)
class SynthConfig:
    num_identities: int = 20
    tracklets_per_identity: int = 4
    frames_per_tracklet: int = 8
    image_height: int = 32
    image_width: int = 16
    occlusion_prob: float = 0.3
    # Band height as a fraction of the image height.
    occlusion_height: float = 0.25
    # Snap bands to multiples of their own height, i.e. onto whole regions.
    occlusion_aligned: bool = True
    pose_shift: int = 2
    noise_std: float = 0.05
    num_cameras: int = 2
    train_fraction: float = 0.5
    num_distractors: int = 0
    appearance_bands: int = 8
    seed: int = 12345

    def __post_init__(self):
        counts = {
            'num_identities': self.num_identities,
            'tracklets_per_identity': self.tracklets_per_identity,
            'frames_per_tracklet': self.frames_per_tracklet,
            'image_height': self.image_height,
            'image_width': self.image_width,
            'num_cameras': self.num_cameras,
            'appearance_bands': self.appearance_bands,
        }
        for name, value in counts.items():
            if value < 1:
                raise ConfigurationError("Synthetic {} must be >= 1, got {}.".format(name, value))
        for name in ('occlusion_prob', 'occlusion_height', 'train_fraction'):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                raise ConfigurationError("Synthetic {} must lie in [0, 1], got {}.".format(name, value))
        if self.pose_shift < 0 or self.noise_std < 0 or self.num_distractors < 0:
            raise ConfigurationError("pose_shift, noise_std and num_distractors must be >= 0.")

    @property
    def num_train_identities(self):
        return int(round(self.num_identities * self.train_fraction))


def occlude(frame, region, k_regions, value=_OCCLUSION_GRAY):
    """Copy of `frame` with region `region` of `k_regions` horizontal stripes painted gray."""
    height = frame.shape[0]
    if height % k_regions or not 0 <= region < k_regions:
        raise ValueError("Cannot occlude region {} of {} on a frame of height {}.".format(region, k_regions, height))
    rows = height // k_regions
    out = np.array(frame, copy=True)
    out[region * rows:(region + 1) * rows] = value
    return out


def _prototype(rng, cfg):
    band_rows = -(-cfg.image_height // cfg.appearance_bands)
    colors = rng.uniform(0, 1, size=(cfg.appearance_bands, 3))
    base = np.repeat(colors, band_rows, axis=0)[:cfg.image_height]
    texture = rng.uniform(-0.1, 0.1, size=(cfg.image_height, cfg.image_width, 3))
    return np.clip(base[:, None, :] + texture, 0, 1)


def _render(prototype, rng, cfg, gain, offset):
    frame = prototype
    if cfg.pose_shift:
        dy, dx = rng.randint(-cfg.pose_shift, cfg.pose_shift + 1, size=2)
        frame = shift(frame, (dy, dx, 0), order=0, mode='nearest')
    if cfg.noise_std:
        frame = frame + rng.randn(*frame.shape) * cfg.noise_std
    frame = frame * gain + offset

    if rng.rand() < cfg.occlusion_prob:
        band = max(1, int(round(cfg.occlusion_height * cfg.image_height)))
        if cfg.occlusion_aligned:
            start = rng.randint(0, max(1, cfg.image_height // band)) * band
        else:
            start = rng.randint(0, cfg.image_height - band + 1)
        frame = np.array(frame, copy=True)
        frame[start:start + band] = _OCCLUSION_GRAY

    return np.clip(frame, 0, 1)


def _tracklet(prototype, rng, cfg, gains, offsets, identity, camera, tracklet_id, is_distractor=False):
    frames = np.stack([_render(prototype, rng, cfg, gains[camera], offsets[camera])
                       for _ in range(cfg.frames_per_tracklet)])
    return Tracklet(frames, identity, camera, tracklet_id, is_distractor)


def synth_generate(cfg):
    """
    Deterministic function of cfg: training identities come first, the
    remaining identities are split into query and gallery.
    """
    rng = np.random.RandomState(cfg.seed)
    gains = rng.uniform(0.8, 1.2, size=(cfg.num_cameras, 3))
    offsets = rng.uniform(-0.05, 0.05, size=(cfg.num_cameras, 3))

    num_train = cfg.num_train_identities
    train = []
    test = []
    tracklet_id = 0
    for identity in range(cfg.num_identities):
        prototype = _prototype(rng, cfg)
        for t in range(cfg.tracklets_per_identity):
            camera = t % cfg.num_cameras
            tracklet = _tracklet(prototype, rng, cfg, gains, offsets, identity, camera, tracklet_id)
            (train if identity < num_train else test).append(tracklet)
            tracklet_id += 1

    for i in range(cfg.num_distractors):
        prototype = _prototype(rng, cfg)
        camera = rng.randint(cfg.num_cameras)
        test.append(_tracklet(prototype, rng, cfg, gains, offsets, cfg.num_identities + i, camera, tracklet_id,
                              is_distractor=True))
        tracklet_id += 1

    query, gallery = query_gallery_split(test)
    logger.info("Synthetic dataset: {} train / {} query / {} gallery tracklets of {} frames.".format(
        len(train), len(query), len(gallery), cfg.frames_per_tracklet))
    return TrackletDataset(train, query, gallery)
