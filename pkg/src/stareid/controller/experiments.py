"""
Experiments on the synthetic occlusion benchmark: the ablation over
aggregation and loss settings, test-time sequence length and region count
sweeps, and the localization check of the attention scores.

Every function returns a pandas DataFrame with one row per run.
"""
import logging

import numpy as np
import pandas

from stareid.controller import harness
from stareid.controller.checkpoint import load_checkpoint
from stareid.datasets.synthetic import occlude
from stareid.datasets.synthetic import synth_generate
from stareid.datasets.tracklet import evenly_spaced_indices
from stareid.profiles.config import with_overrides
from stareid.profiles.config import with_profile
from stareid.profiles.profile import ABLATION_ARMS

logger = logging.getLogger(__name__)

DEFAULT_SEEDS = (12345, 23456, 34567)
DEFAULT_LENGTHS = (2, 4, 6, 8)
DEFAULT_REGIONS = (2, 4, 8)
METRIC_COLUMNS = ['rank1', 'rank5', 'rank10', 'rank20', 'mAP']


def _quiet(cfg, **values):
    # Experiment runs keep nothing on disk.
    return with_overrides(cfg, checkpoint_path='', output_dir='', checkpoint_every=0, **values)


def _train_and_evaluate(cfg):
    dataset = harness.load_data(cfg)
    checkpoint, _ = harness.train(cfg, dataset)
    return harness.evaluate(cfg, checkpoint, dataset)


def run_ablation(cfg, arms=ABLATION_ARMS, seeds=DEFAULT_SEEDS):
    """Train and evaluate every arm once per seed; the data seed follows the run seed."""
    rows = []
    for arm in arms:
        for seed in seeds:
            arm_cfg = _quiet(with_profile(cfg, arm), seed=seed, synth_seed=seed)
            report = _train_and_evaluate(arm_cfg)
            rows.append(dict(arm=arm, seed=seed, **report.as_dict()))
            logger.info("Ablation arm {} (seed {}): rank-1 {:.4f}, mAP {:.4f}.".format(
                arm, seed, report.rank1, report.mAP))
    return pandas.DataFrame(rows)


def summarize(results, by):
    """Mean and standard deviation of the metrics per value of `by`."""
    return results.groupby(by, sort=False)[METRIC_COLUMNS].agg(['mean', 'std'])


def sequence_length_sweep(cfg, checkpoint, lengths=DEFAULT_LENGTHS, dataset=None):
    """One trained model evaluated with clips of every length in `lengths`."""
    dataset = dataset if dataset is not None else harness.load_data(cfg)
    checkpoint = load_checkpoint(checkpoint) if isinstance(checkpoint, str) else checkpoint
    rows = []
    for n in lengths:
        report = harness.evaluate(cfg, checkpoint, dataset, test_frames=n)
        rows.append(dict(test_frames=n, **report.as_dict()))
    return pandas.DataFrame(rows)


def region_count_sweep(cfg, regions=DEFAULT_REGIONS, seeds=DEFAULT_SEEDS):
    rows = []
    for k_regions in regions:
        for seed in seeds:
            report = _train_and_evaluate(_quiet(cfg, k_regions=k_regions, seed=seed, synth_seed=seed))
            rows.append(dict(k_regions=k_regions, seed=seed, **report.as_dict()))
            logger.info("K={} (seed {}): rank-1 {:.4f}.".format(k_regions, seed, report.rank1))
    return pandas.DataFrame(rows)


def occlusion_cases(cfg, cases, rng):
    """
    (clip, frame, region) triples: an unoccluded test clip with one frame's
    region painted gray.
    """
    clean = synth_generate(with_overrides(cfg, synth_occlusion_prob=0.0).synth_config())
    tracklets = clean.query + [t for t in clean.gallery if not t.is_distractor]
    n = cfg.test_frames
    for _ in range(cases):
        tracklet = tracklets[rng.randint(len(tracklets))]
        clip = tracklet.frame_array[evenly_spaced_indices(len(tracklet), n)].copy()
        frame = rng.randint(n)
        region = rng.randint(cfg.k_regions)
        clip[frame] = occlude(clip[frame], region, cfg.k_regions)
        yield clip, frame, region


def attention_localization(cfg, checkpoint, cases=100):
    """Whether the occluded frame gets the lowest score of its region column, per case."""
    model = harness.model_from_checkpoint(cfg, checkpoint)
    rng = np.random.RandomState(cfg.seed)
    rows = []
    for clip, frame, region in occlusion_cases(cfg, cases, rng):
        column = model.scores(clip.astype(np.float32)).scores[:, region]
        rows.append({'frame': frame, 'region': region, 'score': float(column[frame]),
                     'column_min': float(column.min()), 'hit': bool(np.argmin(column) == frame)})

    results = pandas.DataFrame(rows, columns=['frame', 'region', 'score', 'column_min', 'hit'])
    if len(results):
        logger.info("Occluded frame has the column minimum in {:.1%} of {} cases.".format(
            results['hit'].mean(), len(results)))
    return results
