import json

import pytest

from stareid.errors import ConfigurationError
from stareid.profiles.config import RunConfig
from stareid.profiles.config import load_run_config
from stareid.profiles.config import parse_config_text
from stareid.profiles.config import with_overrides
from stareid.profiles.config import with_profile
from stareid.profiles.profile import ABLATION_ARMS
from stareid.profiles.profile import instantiate_aggregator
from stareid.profiles.profile import load_profile


def test_defaults_are_valid():
    cfg = load_run_config()
    assert cfg.frames_per_clip == 4
    assert cfg.k_regions == 4
    assert (cfg.p, cfg.k_per_id) == (16, 4)
    assert cfg.margin == 0.3
    assert cfg.feature_size == (16, 8)


def test_key_value_file(tmp_path):
    path = tmp_path / 'run.cfg'
    path.write_text("# small run\nepochs = 3\nuse_reg=false\nhidden_channels=8,8\nmargin=0.5  # wider\n")
    cfg = load_run_config(str(path))

    assert cfg.epochs == 3
    assert cfg.use_reg is False
    assert cfg.hidden_channels == (8, 8)
    assert cfg.margin == 0.5


def test_json_file_and_overrides(tmp_path):
    path = tmp_path / 'run.json'
    path.write_text(json.dumps({'epochs': 3, 'k_regions': 2}))
    cfg = load_run_config(str(path), epochs='5')

    assert cfg.epochs == 5
    assert cfg.k_regions == 2


def test_profile_is_layered_beneath_file(tmp_path):
    path = tmp_path / 'run.cfg'
    path.write_text("profile=baseline_tl_avg\nuse_triplet=false\n")
    cfg = load_run_config(str(path))

    assert cfg.aggregator == 'average'
    assert cfg.use_triplet is False
    assert cfg.use_reg is False


def test_every_arm_loads():
    for arm in ABLATION_ARMS:
        profile = load_profile(arm)
        assert profile['name'] == arm
        cfg = with_profile(RunConfig(), arm)
        assert cfg.aggregator == profile['aggregator']
        aggregator = instantiate_aggregator(cfg.aggregator, k_regions=cfg.k_regions)
        assert aggregator.get_name() == cfg.aggregator


def test_invalid_configurations():
    with pytest.raises(ConfigurationError, match="frames_per_clip"):
        load_run_config(frames_per_clip=1)
    with pytest.raises(ConfigurationError, match="not divisible"):
        load_run_config(k_regions=3)
    with pytest.raises(ConfigurationError, match="Unknown"):
        load_run_config(batch_size=64)
    with pytest.raises(ConfigurationError):
        load_run_config(aggregator='max')
    with pytest.raises(ConfigurationError):
        load_run_config(use_reg='maybe')
    with pytest.raises(ConfigurationError):
        load_run_config(p=1)
    with pytest.raises(ConfigurationError):
        load_run_config(synth_occlusion_prob=2)
    with pytest.raises(ConfigurationError, match="milestones"):
        load_run_config(lr_milestones='8')


def test_reg_off_allows_single_frame_clips():
    cfg = load_run_config(frames_per_clip=1, use_reg=False)
    assert cfg.frames_per_clip == 1


def test_parse_errors():
    with pytest.raises(ConfigurationError):
        parse_config_text("epochs 3\n")
    with pytest.raises(ConfigurationError):
        parse_config_text('{"nested": {"epochs": 3}}')
    with pytest.raises(ConfigurationError, match="JSON"):
        parse_config_text('{"epochs": 3,}')


def test_round_trip_and_overrides():
    cfg = load_run_config(epochs=7)
    assert RunConfig.from_dict(cfg.to_dict()) == cfg
    assert with_overrides(cfg, k_regions=8).k_regions == 8
    assert cfg.schedule().milestones == ((2, 3e-5), (4, 3e-6))
    assert cfg.synth_config().image_height == cfg.image_height


def test_profile_from_path(tmp_path):
    path = tmp_path / 'custom.json'
    path.write_text(json.dumps({'name': 'custom', 'aggregator': 'average', 'use_triplet': True, 'use_reg': False}))
    cfg = load_run_config(profile=str(path))

    assert cfg.aggregator == 'average'
    with pytest.raises(ValueError):
        instantiate_aggregator('max')
    with pytest.raises(ConfigurationError, match="Unknown profile"):
        load_profile(str(tmp_path / 'missing.json'))


def test_base_layers_beneath_profile_and_overrides():
    base = load_run_config(aggregator='average', k_regions=2, use_reg=False).to_dict()

    assert load_run_config(base=base).aggregator == 'average'
    assert load_run_config(base=base, k_regions=8).k_regions == 8
    cfg = load_run_config(base=base, profile='baseline_tl_sta_fusion_reg')
    assert (cfg.aggregator, cfg.use_reg, cfg.k_regions) == ('sta', True, 2)


def test_default_synthetic_split_feeds_a_batch():
    cfg = load_run_config()
    assert cfg.synth_config().num_train_identities >= cfg.p
    with pytest.raises(ConfigurationError, match="synthetic training split"):
        load_run_config(synth_num_identities=20)
    assert load_run_config(synth_num_identities=20, data_dir='somewhere').p == 16
