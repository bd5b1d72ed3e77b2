"""
End-to-end operations: train, evaluate, extract embeddings and dump
attention scores. The CLI and the experiments are thin layers over these.
"""
import logging
import os
from os.path import join

import numpy as np
import pandas

from stareid.controller.checkpoint import check_compatible
from stareid.controller.checkpoint import load_checkpoint
from stareid.controller.checkpoint import save_checkpoint
from stareid.controller.model import init_model
from stareid.controller.trainer import TrainingEnvironment
from stareid.datasets.loader import read_dataset
from stareid.datasets.synthetic import synth_generate
from stareid.datasets.tracklet import evenly_spaced_indices
from stareid.datasets.tracklet import query_gallery_split
from stareid.datasets.tracklet import sample_frame_indices
from stareid.errors import VersionError
from stareid.metrics.embeddings_file import read_embeddings
from stareid.metrics.embeddings_file import write_embeddings
from stareid.metrics.retrieval import RetrievalSet
from stareid.metrics.retrieval import evaluate_retrieval
from stareid.profiles.config import load_run_config

logger = logging.getLogger(__name__)

LOSS_HISTORY = 'loss_history.csv'
ATTENTION_COLUMNS = ['frame_index', 'region_index', 'score']


def load_data(cfg):
    """The dataset under data_dir, or the synthetic benchmark when it is empty."""
    if cfg.data_dir:
        return read_dataset(cfg.data_dir)
    logger.info("No data_dir configured; generating the synthetic benchmark.")
    return synth_generate(cfg.synth_config())


def _as_checkpoint(checkpoint):
    return load_checkpoint(checkpoint) if isinstance(checkpoint, str) else checkpoint


def train(cfg, dataset=None, resume=None):
    """
    Train from scratch, or continue from `resume` (a Checkpoint or a path).
    Writes the final checkpoint to cfg.checkpoint_path and the per-epoch loss
    history to <output_dir>/loss_history.csv when those are set.
    """
    dataset = dataset if dataset is not None else load_data(cfg)
    resume = _as_checkpoint(resume) if resume is not None else None

    env = TrainingEnvironment(cfg, dataset, checkpoint=resume)
    history = env.run()
    checkpoint = env.checkpoint()

    if cfg.checkpoint_path:
        save_checkpoint(cfg.checkpoint_path, checkpoint)
    if cfg.output_dir:
        os.makedirs(cfg.output_dir, exist_ok=True)
        history.to_csv(join(cfg.output_dir, LOSS_HISTORY), index=False)
    return checkpoint, history


def config_from_checkpoint(checkpoint, path=None, **overrides):
    """
    The configuration a checkpoint was trained with, with a config file and
    overrides on top. Model-defining keys that contradict the checkpoint fail
    later, in model_from_checkpoint.
    """
    checkpoint = _as_checkpoint(checkpoint)
    return load_run_config(path, base=checkpoint.config, **overrides)


def model_from_checkpoint(cfg, checkpoint):
    checkpoint = _as_checkpoint(checkpoint)
    check_compatible(checkpoint, cfg)
    model = init_model(cfg, len(checkpoint.classes), np.random.RandomState(cfg.seed))
    for name, value in model.params.items():
        if name not in checkpoint.params or checkpoint.params[name].shape != value.shape:
            raise VersionError("Checkpoint tensor {!r} is missing or does not have shape {}.".format(
                name, value.shape))
    model.params = dict(checkpoint.params)
    return model


def _clip_indices(length, cfg, rng, n):
    if cfg.test_sampling == 'even':
        return evenly_spaced_indices(length, n)
    return sample_frame_indices(length, n, rng)


def embed_tracklets(model, tracklets, cfg, test_frames=None):
    """
    One float32 embedding per tracklet: test_repeats clips of test_frames
    frames each, embedded and averaged. Random sampling is seeded by cfg.seed.
    """
    n = test_frames or cfg.test_frames
    rng = np.random.RandomState(cfg.seed)
    embeddings = []
    for tracklet in tracklets:
        frames = tracklet.frame_array
        clips = np.stack([frames[_clip_indices(len(tracklet), cfg, rng, n)] for _ in range(cfg.test_repeats)])
        clip_embeddings = model.embed(clips.astype(np.float32), precomputed=tracklet.precomputed)
        embeddings.append(clip_embeddings.mean(axis=0))

    if not embeddings:
        return np.zeros((0, model.head.weight.shape[1]), dtype=np.float32)
    return np.stack(embeddings).astype(np.float32)


def _split(dataset, split):
    if split == 'test':
        return dataset.query, dataset.gallery
    if split == 'train':
        return query_gallery_split(dataset.train)
    raise ValueError("Unknown split {!r}; use 'test' or 'train'.".format(split))


def retrieval_set(model, query, gallery, cfg, test_frames=None):
    return RetrievalSet(
        query_embeddings=embed_tracklets(model, query, cfg, test_frames),
        query_identities=np.array([t.identity for t in query], dtype=int),
        query_cameras=np.array([t.camera for t in query], dtype=int),
        gallery_embeddings=embed_tracklets(model, gallery, cfg, test_frames),
        gallery_identities=np.array([t.identity for t in gallery], dtype=int),
        gallery_cameras=np.array([t.camera for t in gallery], dtype=int),
        gallery_distractors=np.array([t.is_distractor for t in gallery], dtype=bool))


def evaluate(cfg, checkpoint, dataset=None, split='test', test_frames=None):
    """MetricsReport of query against gallery, clips of test_frames (default cfg.test_frames) frames."""
    model = model_from_checkpoint(cfg, checkpoint)
    dataset = dataset if dataset is not None else load_data(cfg)
    query, gallery = _split(dataset, split)
    logger.info("Evaluating {} queries against {} gallery tracklets at N={}.".format(
        len(query), len(gallery), test_frames or cfg.test_frames))
    meta = retrieval_set(model, query, gallery, cfg, test_frames)
    return evaluate_retrieval(meta, normalize=cfg.normalize_embeddings)


def extract(cfg, checkpoint, tracklets, path):
    """Write the STAE embeddings of `tracklets` to `path`; returns the embeddings."""
    model = model_from_checkpoint(cfg, checkpoint)
    embeddings = embed_tracklets(model, tracklets, cfg)
    write_embeddings(path, embeddings,
                     [t.identity for t in tracklets],
                     [t.camera for t in tracklets],
                     [t.is_distractor for t in tracklets])
    logger.info("Extracted {} embeddings to {}.".format(len(tracklets), path))
    return embeddings


def evaluate_embeddings(query_path, gallery_path, normalize=False):
    """MetricsReport straight from two STAE files."""
    query = read_embeddings(query_path)
    gallery = read_embeddings(gallery_path)
    meta = RetrievalSet(query.embeddings, query.identities, query.cameras,
                        gallery.embeddings, gallery.identities, gallery.cameras, gallery.distractors)
    return evaluate_retrieval(meta, normalize=normalize)


def attention_frame(scores):
    """ScoreMatrix -> one row per (frame, region)."""
    S = scores.scores
    frames, regions = np.meshgrid(np.arange(S.shape[0]), np.arange(S.shape[1]), indexing='ij')
    return pandas.DataFrame({'frame_index': frames.ravel(), 'region_index': regions.ravel(),
                             'score': S.ravel()}, columns=ATTENTION_COLUMNS)


def dump_attention(cfg, checkpoint, tracklet, path=None):
    """Score matrix of one test clip of `tracklet`, optionally written as CSV."""
    model = model_from_checkpoint(cfg, checkpoint)
    indices = _clip_indices(len(tracklet), cfg, np.random.RandomState(cfg.seed), cfg.test_frames)
    clip = tracklet.frame_array[indices].astype(np.float32)
    frame = attention_frame(model.scores(clip, precomputed=tracklet.precomputed))
    if path:
        frame.to_csv(path, index=False)
        logger.info("Wrote {} attention scores of tracklet {} to {}.".format(len(frame), tracklet.name, path))
    return frame
