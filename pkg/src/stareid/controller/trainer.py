"""
Training environment/controller.

One step draws a P x K batch of tracklets, samples an N-frame clip from each
(flipped horizontally as a whole with probability flip_prob), runs the model
and applies one Adam update. An epoch is max(1, train identities // P) steps.
"""
import logging
import time

import numpy as np
import pandas

from stareid.controller.checkpoint import Checkpoint
from stareid.controller.checkpoint import check_compatible
from stareid.controller.checkpoint import save_checkpoint
from stareid.controller.model import init_model
from stareid.datasets.sampler import pk_batch
from stareid.datasets.tracklet import sample_frames
from stareid.errors import ConfigurationError
from stareid.errors import VersionError
from stareid.optim.adam import AdamState
from stareid.optim.adam import adam_step
from stareid.optim.schedule import lr_at

logger = logging.getLogger(__name__)

HISTORY_COLUMNS = ['epoch', 'lr', 'total', 'softmax', 'triplet', 'reg', 'active_triplets']


class TrainingEnvironment:

    def __init__(self, cfg, dataset, checkpoint=None):
        self._program_start_time = time.time()
        self._time_profile = {'sampling': 0.0, 'forward_backward': 0.0, 'optimizer': 0.0}

        self._cfg = cfg
        self._train = list(dataset.train)
        self._classes = np.array(dataset.train_identities)
        if len(self._classes) < cfg.p:
            raise ConfigurationError("P={} identities per batch, but the training split has only {}.".format(
                cfg.p, len(self._classes)))

        kinds = {t.precomputed for t in self._train}
        if len(kinds) > 1:
            raise ConfigurationError("Training split mixes precomputed feature maps and raw frames.")
        self._precomputed = kinds.pop()

        self._rng = np.random.RandomState(cfg.seed)
        self.model = init_model(cfg, len(self._classes), self._rng)
        self._adam = AdamState.for_params(self.model.params, weight_decay=cfg.weight_decay)
        self._schedule = cfg.schedule()
        self.epoch = 0
        self.history = []

        if checkpoint is not None:
            self._restore(checkpoint)

        self._time_profile['init'] = time.time() - self._program_start_time

    @property
    def steps_per_epoch(self):
        return max(1, len(self._classes) // self._cfg.p)

    def _restore(self, checkpoint):
        check_compatible(checkpoint, self._cfg, resume=True)
        if list(checkpoint.classes) != self._classes.tolist():
            raise VersionError("Checkpoint was trained on identities {}, dataset has {}.".format(
                checkpoint.classes, self._classes.tolist()))
        for name, value in self.model.params.items():
            if name not in checkpoint.params or checkpoint.params[name].shape != value.shape:
                raise VersionError("Checkpoint tensor {!r} is missing or does not have shape {}.".format(
                    name, value.shape))

        self.model.params = dict(checkpoint.params)
        self._adam = checkpoint.adam
        self._rng.set_state(checkpoint.rng_state)
        self.epoch = checkpoint.epoch
        self.history = list(checkpoint.history)
        logger.info("Resuming training at epoch {}.".format(self.epoch))

    def _clips(self, batch):
        cfg = self._cfg
        clips = []
        pairs = []
        for tracklet in batch:
            clip = sample_frames(tracklet, cfg.frames_per_clip, self._rng)
            if self._rng.rand() < cfg.flip_prob:
                clip = clip[:, :, ::-1]
            clips.append(clip)
            if cfg.use_reg:
                pairs.append(self._rng.choice(cfg.frames_per_clip, size=2, replace=False))
        pairs = np.array(pairs, dtype=int).reshape(-1, 2)
        return np.stack(clips).astype(np.float32), pairs

    def step(self, lr):
        cfg = self._cfg

        sampling_start_time = time.time()
        batch, identities = pk_batch(self._train, cfg.p, cfg.k_per_id, self._rng)
        labels = np.searchsorted(self._classes, identities)
        clips, pairs = self._clips(batch)
        forward_start_time = time.time()
        self._time_profile['sampling'] += forward_start_time - sampling_start_time

        report, grads = self.model.loss_and_grads(clips, labels, pairs, cfg, precomputed=self._precomputed)
        optimizer_start_time = time.time()
        self._time_profile['forward_backward'] += optimizer_start_time - forward_start_time

        self.model.params, self._adam = adam_step(self.model.params, grads, self._adam, lr)
        self._time_profile['optimizer'] += time.time() - optimizer_start_time

        logger.debug("step {}: total {:.6f} (softmax {:.6f}, triplet {:.6f}, reg {:.6f}).".format(
            self._adam.step, report.total, report.l_softmax, report.l_triplet, report.reg))
        return report

    def run_epoch(self):
        lr = lr_at(self._schedule, self.epoch)
        reports = [self.step(lr) for _ in range(self.steps_per_epoch)]
        self.epoch += 1

        row = {'epoch': self.epoch, 'lr': lr}
        for key in ('total', 'softmax', 'triplet', 'reg', 'active_triplets'):
            row[key] = float(np.mean([report.as_dict()[key] for report in reports]))
        self.history.append(row)
        logger.info("Epoch {}/{}: loss {:.6f} (lr {:g}).".format(self.epoch, self._cfg.epochs, row['total'], lr))
        return row

    def run(self):
        logger.info("Training started at epoch {}.".format(self.epoch))
        cfg = self._cfg
        while self.epoch < cfg.epochs:
            self.run_epoch()
            if cfg.checkpoint_every and cfg.checkpoint_path and self.epoch % cfg.checkpoint_every == 0:
                save_checkpoint(cfg.checkpoint_path, self.checkpoint())

        total_measured_time = sum(self._time_profile.values())
        self._time_profile['total_measured_time'] = total_measured_time
        self._time_profile['total_time'] = time.time() - self._program_start_time
        logger.info("Measured training time: {}".format(self._time_profile))
        logger.info("Training completed.")
        return self.history_frame()

    def history_frame(self):
        return pandas.DataFrame(self.history, columns=HISTORY_COLUMNS)

    def checkpoint(self):
        return Checkpoint(params=dict(self.model.params), adam=self._adam, rng_state=self._rng.get_state(),
                          epoch=self.epoch, config=self._cfg.to_dict(), classes=self._classes.tolist(),
                          history=list(self.history))
