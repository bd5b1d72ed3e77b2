"""
Run configuration.

A run is configured by a flat file, either a JSON object or `key=value` lines
(`#` starts a comment), whose keys are the RunConfig fields. A `profile` key
layers one of the packaged ablation profiles underneath the file.
"""
import dataclasses
import json
import logging
from dataclasses import dataclass

import numpy as np

from stareid.datasets.synthetic import SynthConfig
from stareid.errors import ConfigurationError
from stareid.optim.schedule import LrSchedule
from stareid.profiles.profile import AGGREGATORS
from stareid.profiles.profile import load_profile

logger = logging.getLogger(__name__)

# Profile entries that describe the profile rather than configure the run.
_PROFILE_METADATA = ('name', 'description')
_TRUE = ('1', 'true', 'yes', 'on')
_FALSE = ('0', 'false', 'no', 'off')


@dataclass(frozen=True)
class RunConfig:
    profile: str = ''
    # Clip and model shape.
    frames_per_clip: int = 4
    k_regions: int = 4
    embedding_dim: int = 128
    feature_dim: int = 32
    hidden_channels: tuple = (16, 32)
    strides: tuple = (1, 2, 1)
    image_height: int = 32
    image_width: int = 16
    # Batch and objective.
    p: int = 16
    k_per_id: int = 4
    margin: float = 0.3
    reg_weight: float = 0.1
    frobenius: str = 'sqrt'
    reduction: str = 'sum'
    aggregator: str = 'sta'
    use_triplet: bool = True
    use_reg: bool = True
    flip_prob: float = 0.5
    # Optimization.
    epochs: int = 30
    base_lr: float = 3e-4
    lr_milestones: str = ''
    weight_decay: float = 5e-4
    seed: int = 12345
    # Evaluation.
    test_frames: int = 4
    test_sampling: str = 'even'
    test_repeats: int = 1
    normalize_embeddings: bool = False
    # Paths.
    data_dir: str = ''
    checkpoint_path: str = 'sta.ckpt'
    output_dir: str = '.'
    checkpoint_every: int = 0
    # Synthetic data, used when data_dir is empty.
    synth_num_identities: int = 40
    synth_tracklets_per_identity: int = 4
    synth_frames_per_tracklet: int = 8
    synth_occlusion_prob: float = 0.3
    synth_occlusion_height: float = 0.25
    synth_occlusion_aligned: bool = True
    synth_pose_shift: int = 2
    synth_noise_std: float = 0.05
    synth_num_cameras: int = 2
    synth_train_fraction: float = 0.5
    synth_num_distractors: int = 0
    synth_appearance_bands: int = 8
    synth_seed: int = 12345

    @property
    def channels(self):
        return tuple(self.hidden_channels) + (self.feature_dim, )

    @property
    def feature_size(self):
        stride = int(np.prod(self.strides))
        if self.image_height % stride or self.image_width % stride:
            raise ConfigurationError("Frames of {}x{} do not divide by the backbone stride {}.".format(
                self.image_height, self.image_width, stride))
        return self.image_height // stride, self.image_width // stride

    @property
    def rows_per_identity(self):
        return self.k_per_id * (self.frames_per_clip if self.aggregator == 'none' else 1)

    def validate(self):
        positive = ('frames_per_clip', 'k_regions', 'embedding_dim', 'feature_dim', 'image_height', 'image_width',
                    'p', 'k_per_id', 'test_frames', 'test_repeats')
        for name in positive:
            if getattr(self, name) < 1:
                raise ConfigurationError("{} must be >= 1, got {}.".format(name, getattr(self, name)))
        if self.epochs < 0 or self.checkpoint_every < 0:
            raise ConfigurationError("epochs and checkpoint_every must be >= 0.")
        if self.margin < 0 or self.reg_weight < 0 or self.weight_decay < 0 or self.base_lr <= 0:
            raise ConfigurationError("margin, reg_weight and weight_decay must be >= 0 and base_lr > 0.")
        if not 0 <= self.flip_prob <= 1:
            raise ConfigurationError("flip_prob must lie in [0, 1], got {}.".format(self.flip_prob))
        if len(self.strides) != len(self.channels):
            raise ConfigurationError("Backbone has {} strides for {} layers.".format(
                len(self.strides), len(self.channels)))

        choices = {
            'frobenius': ('sqrt', 'squared'),
            'reduction': ('sum', 'mean'),
            'aggregator': tuple(AGGREGATORS),
            'test_sampling': ('even', 'random'),
        }
        for name, allowed in choices.items():
            if getattr(self, name) not in allowed:
                raise ConfigurationError("{} must be one of {}, got {!r}.".format(name, allowed, getattr(self, name)))

        if self.use_reg and self.frames_per_clip < 2:
            raise ConfigurationError("Inter-frame regularization needs frames_per_clip >= 2.")
        if self.use_triplet and (self.p < 2 or self.rows_per_identity < 2):
            raise ConfigurationError("Triplet loss needs p >= 2 and at least 2 rows per identity.")

        height, _ = self.feature_size
        if height % self.k_regions:
            raise ConfigurationError("Feature map height {} is not divisible by k_regions={}.".format(
                height, self.k_regions))

        try:
            self.schedule()
        except ValueError as e:
            raise ConfigurationError("Bad learning rate milestones {!r}: {}".format(self.lr_milestones, e))
        synth = self.synth_config()
        if not self.data_dir and synth.num_train_identities < self.p:
            raise ConfigurationError("P={} identities per batch, but the synthetic training split has only {}.".format(
                self.p, synth.num_train_identities))
        return self

    def schedule(self):
        if self.lr_milestones:
            return LrSchedule.from_string(self.lr_milestones, self.base_lr)
        return LrSchedule.scaled(max(self.epochs, 1), self.base_lr)

    def synth_config(self):
        values = {f.name[len('synth_'):]: getattr(self, f.name)
                  for f in dataclasses.fields(self) if f.name.startswith('synth_')}
        return SynthConfig(image_height=self.image_height, image_width=self.image_width, **values)

    def to_dict(self):
        values = dataclasses.asdict(self)
        return {key: list(value) if isinstance(value, tuple) else value for key, value in values.items()}

    @classmethod
    def from_dict(cls, values):
        defaults = {f.name: f.default for f in dataclasses.fields(cls)}
        unknown = sorted(set(values) - set(defaults))
        if unknown:
            raise ConfigurationError("Unknown configuration keys: {}.".format(', '.join(unknown)))
        return cls(**{key: _coerce(key, value, defaults[key]) for key, value in values.items()})


def _coerce(key, value, default):
    try:
        if isinstance(default, bool):
            if isinstance(value, str):
                if value.strip().lower() not in _TRUE + _FALSE:
                    raise ValueError(value)
                return value.strip().lower() in _TRUE
            return bool(value)
        if isinstance(default, tuple):
            if isinstance(value, str):
                value = [part for part in value.replace(' ', '').split(',') if part]
            return tuple(int(part) for part in value)
        return type(default)(value)
    except (TypeError, ValueError):
        raise ConfigurationError("Cannot read {}={!r} as {}.".format(key, value, type(default).__name__))


def parse_config_text(text):
    """Flat JSON object or key=value lines -> dict of raw values."""
    stripped = text.strip()
    if stripped.startswith('{'):
        try:
            values = json.loads(stripped)
        except ValueError as e:
            raise ConfigurationError("Configuration is not valid JSON: {}".format(e))
        nested = [key for key, value in values.items() if isinstance(value, dict)]
        if nested:
            raise ConfigurationError("Configuration must be flat; nested keys {}.".format(nested))
        return values

    values = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigurationError("Line {} is not key=value: {!r}.".format(number, line))
        key, value = line.split('=', 1)
        values[key.strip()] = value.strip()
    return values


def load_run_config(path=None, base=None, **overrides):
    """
    base < profile < file < keyword overrides; the result is validated.
    `base` is a configuration dict such as the one a checkpoint carries; a
    profile is layered only when the file or the overrides name one.
    """
    values = {}
    if path:
        with open(path) as f:
            values.update(parse_config_text(f.read()))
    values.update(overrides)

    layered = dict(base or {})
    profile = values.get('profile')
    if profile:
        layered.update({key: value for key, value in load_profile(profile).items()
                        if key not in _PROFILE_METADATA})
        logger.debug("Layered profile {} beneath the configuration.".format(profile))
    layered.update(values)

    cfg = RunConfig.from_dict(layered).validate()
    logger.info("Run configuration: aggregator={}, use_triplet={}, use_reg={}, N={}, K={}, P={}x{}.".format(
        cfg.aggregator, cfg.use_triplet, cfg.use_reg, cfg.frames_per_clip, cfg.k_regions, cfg.p, cfg.k_per_id))
    return cfg


def with_overrides(cfg, **values):
    """A validated copy of `cfg` with `values` replaced."""
    merged = cfg.to_dict()
    merged.update(values)
    return RunConfig.from_dict(merged).validate()


def with_profile(cfg, profile, **values):
    """`cfg` switched onto the ablation arm `profile`, then `values` on top."""
    settings = {key: value for key, value in load_profile(profile).items() if key not in _PROFILE_METADATA}
    settings.update(values)
    return with_overrides(cfg, profile=profile, **settings)
