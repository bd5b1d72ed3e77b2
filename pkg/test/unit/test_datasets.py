import numpy as np
import pandas
import pytest

from stareid.backbone import FeatureMapSet
from stareid.datasets import SynthConfig
from stareid.datasets import Tracklet
from stareid.datasets import TrackletDataset
from stareid.datasets import evenly_spaced_indices
from stareid.datasets import occlude
from stareid.datasets import pk_batch
from stareid.datasets import query_gallery_split
from stareid.datasets import read_dataset
from stareid.datasets import read_tracklet
from stareid.datasets import sample_frame_indices
from stareid.datasets import sample_frames
from stareid.datasets import synth_generate
from stareid.datasets import write_dataset
from stareid.datasets.loader import MANIFEST
from stareid.errors import ConfigurationError
from stareid.errors import FormatError

_SEED = 12345


def _create_tracklet(identity, camera=0, frames=6, tracklet_id=0):
    images = np.full((frames, 4, 2, 3), identity / 10.0) + np.arange(frames)[:, None, None, None] / 100.0
    return Tracklet(images, identity, camera, tracklet_id)


def _create_synth(**overrides):
    values = dict(num_identities=6, tracklets_per_identity=3, frames_per_tracklet=4, image_height=8,
                  image_width=4, num_distractors=1)
    values.update(overrides)
    return synth_generate(SynthConfig(**values))


def test_sample_frame_indices():
    rng = np.random.RandomState(_SEED)
    indices = sample_frame_indices(10, 4, rng)
    assert len(set(indices)) == 4
    assert list(indices) == sorted(indices)

    short = sample_frame_indices(2, 5, rng)
    assert len(short) == 5
    assert set(short) <= {0, 1}

    with pytest.raises(ValueError):
        sample_frame_indices(0, 4, rng)


def test_sample_frames_keeps_temporal_order():
    tracklet = _create_tracklet(1, frames=8)
    clip = sample_frames(tracklet, 4, np.random.RandomState(_SEED))
    offsets = clip[:, 0, 0, 0]

    assert clip.shape == (4, 4, 2, 3)
    assert np.all(np.diff(offsets) > 0)


def test_evenly_spaced_indices():
    np.testing.assert_array_equal(evenly_spaced_indices(9, 3), [0, 4, 8])
    np.testing.assert_array_equal(evenly_spaced_indices(1, 3), [0, 0, 0])


def test_tracklet_validation_and_name():
    tracklet = _create_tracklet(3, camera=1, tracklet_id=7)
    assert tracklet.name == '3_1_7'
    assert len(tracklet) == 6
    assert not tracklet.precomputed

    precomputed = Tracklet(FeatureMapSet(np.ones((2, 4, 2, 3))), 0, 0)
    assert precomputed.precomputed

    with pytest.raises(ValueError):
        Tracklet(np.zeros((0, 4, 2, 3)), 0, 0)
    with pytest.raises(ValueError):
        Tracklet(np.zeros((1, 4, 2, 3)), -1, 0)


def test_pk_batch():
    dataset = [_create_tracklet(identity, tracklet_id=t) for identity in range(5) for t in range(2)]
    batch, labels = pk_batch(dataset, 3, 4, np.random.RandomState(_SEED))

    assert len(batch) == 12
    identities, counts = np.unique(labels, return_counts=True)
    assert len(identities) == 3
    assert set(counts) == {4}
    assert all(t.identity == label for t, label in zip(batch, labels))

    with pytest.raises(ValueError):
        pk_batch(dataset, 6, 2, np.random.RandomState(_SEED))


def test_pk_batch_of_whole_dataset_is_a_permutation():
    dataset = [_create_tracklet(identity, tracklet_id=t) for identity in range(4) for t in range(3)]
    batch, _ = pk_batch(dataset, 4, 3, np.random.RandomState(_SEED))

    assert sorted(id(t) for t in batch) == sorted(id(t) for t in dataset)


def test_pk_batch_is_deterministic():
    dataset = [_create_tracklet(identity, tracklet_id=t) for identity in range(5) for t in range(2)]
    first = pk_batch(dataset, 2, 2, np.random.RandomState(_SEED))
    second = pk_batch(dataset, 2, 2, np.random.RandomState(_SEED))

    assert [t.name for t in first[0]] == [t.name for t in second[0]]


def test_query_gallery_split():
    tracklets = [_create_tracklet(1, camera=1, tracklet_id=0), _create_tracklet(1, camera=0, tracklet_id=1),
                 _create_tracklet(2, camera=1, tracklet_id=2)]
    query, gallery = query_gallery_split(tracklets)

    assert [t.name for t in query] == ['1_0_1', '2_1_2']
    assert [t.name for t in gallery] == ['1_1_0']


def test_synth_generate_splits_identities():
    dataset = _create_synth()
    train_ids = set(dataset.train_identities)
    test_ids = {t.identity for t in dataset.query + dataset.gallery if not t.is_distractor}

    assert train_ids == {0, 1, 2}
    assert test_ids == {3, 4, 5}
    assert sum(t.is_distractor for t in dataset.gallery) == 1
    assert len(dataset.query) == 3
    frames = dataset.train[0].frame_array
    assert frames.shape == (4, 8, 4, 3)
    assert frames.min() >= 0 and frames.max() <= 1


def test_synth_generate_is_deterministic():
    first = _create_synth()
    second = _create_synth()
    np.testing.assert_array_equal(first.gallery[-1].frame_array, second.gallery[-1].frame_array)


def test_synth_config_validation():
    with pytest.raises(ConfigurationError):
        SynthConfig(occlusion_prob=1.5)
    with pytest.raises(ConfigurationError):
        SynthConfig(num_identities=0)


def test_occlude():
    frame = np.zeros((8, 4, 3))
    covered = occlude(frame, 1, 4)

    np.testing.assert_array_equal(covered[2:4], 0.5)
    assert covered[:2].sum() == 0 and covered[4:].sum() == 0
    assert frame.sum() == 0
    with pytest.raises(ValueError):
        occlude(frame, 4, 4)


def test_dataset_round_trip(tmp_path):
    dataset = _create_synth()
    dataset.train[0] = Tracklet(FeatureMapSet(np.ones((2, 4, 2, 3))), dataset.train[0].identity,
                                dataset.train[0].camera, dataset.train[0].tracklet_id)
    root = str(tmp_path / 'data')
    write_dataset(dataset, root)

    manifest = pandas.read_csv(str(tmp_path / 'data' / MANIFEST))
    assert list(manifest.columns) == ['tracklet', 'split']
    assert (manifest['split'] == 'distractor').sum() == 1

    loaded = read_dataset(root)
    assert [t.name for t in loaded.train] == [t.name for t in dataset.train]
    assert [t.name for t in loaded.gallery] == [t.name for t in dataset.gallery]
    assert loaded.train[0].precomputed
    assert loaded.gallery[-1].is_distractor
    np.testing.assert_array_equal(loaded.query[0].frame_array, dataset.query[0].frame_array)


def test_read_tracklet_errors(tmp_path):
    with pytest.raises(FormatError):
        read_tracklet(str(tmp_path / 'not_a_name'))
    (tmp_path / '1_0_0').mkdir()
    with pytest.raises(FormatError):
        read_tracklet(str(tmp_path / '1_0_0'))
    with pytest.raises(FileNotFoundError):
        read_dataset(str(tmp_path / 'missing'))


def test_empty_dataset_identities():
    assert TrackletDataset().train_identities == []


def test_synth_without_nuisances_repeats_one_frame():
    dataset = _create_synth(occlusion_prob=0.0, noise_std=0.0, pose_shift=0)
    frames = dataset.train[0].frame_array
    for frame in frames[1:]:
        np.testing.assert_array_equal(frame, frames[0])


def test_synth_default_size():
    dataset = synth_generate(SynthConfig())
    tracklets = dataset.train + dataset.query + dataset.gallery

    assert len(tracklets) == 80
    assert sum(len(t) for t in tracklets) == 640
