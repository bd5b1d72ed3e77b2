import os

import pandas
import pytest

from stareid.main.cli import StaApp
from stareid.main.cli import main

_CONFIG = """
hidden_channels = 4
feature_dim = 8
strides = 1,2
embedding_dim = 16
image_height = 16
image_width = 8
p = 4
k_per_id = 2
epochs = 1
lr_milestones = 100:1e-3
synth_num_identities = 10
synth_tracklets_per_identity = 3
synth_frames_per_tracklet = 6
"""


def _create_config(tmp_path):
    path = tmp_path / 'run.cfg'
    path.write_text(_CONFIG + "checkpoint_path = {}\noutput_dir = {}\n".format(
        tmp_path / 'sta.ckpt', tmp_path / 'out'))
    return str(path)


def test_cli_transcript(tmp_path):
    config = _create_config(tmp_path)
    data = str(tmp_path / 'data')
    checkpoint = str(tmp_path / 'sta.ckpt')
    app = StaApp()

    app.do_synth("--config {} --out {}".format(config, data))
    app.do_train("--config {} --set data_dir={}".format(config, data))
    assert os.path.isfile(checkpoint)
    assert os.path.isfile(str(tmp_path / 'out' / 'loss_history.csv'))

    report = str(tmp_path / 'report.csv')
    app.do_eval("--config {} --set data_dir={} --checkpoint {} --test-n 6 --out {}".format(
        config, data, checkpoint, report))
    assert pandas.read_csv(report)['evaluated'].iloc[0] == 5

    query = str(tmp_path / 'query.stae')
    gallery = str(tmp_path / 'gallery.stae')
    app.do_extract("--config {} --checkpoint {} --data {} --split query --out {}".format(
        config, checkpoint, data, query))
    app.do_extract("--config {} --checkpoint {} --data {} --split gallery --out {}".format(
        config, checkpoint, data, gallery))
    app.do_eval("--query-embeddings {} --gallery-embeddings {}".format(query, gallery))

    tracklet = sorted(name for name in os.listdir(data) if name[0].isdigit())[0]
    scores = str(tmp_path / 'scores.csv')
    app.do_dump_attention("--config {} --checkpoint {} --tracklet {} --out {}".format(
        config, checkpoint, os.path.join(data, tracklet), scores))
    assert len(pandas.read_csv(scores)) == 16

    assert app.exit_code == 0


def test_checkpoint_commands_need_no_config(tmp_path):
    config = _create_config(tmp_path)
    data = str(tmp_path / 'data')
    checkpoint = str(tmp_path / 'sta.ckpt')
    app = StaApp()
    app.do_synth("--config {} --out {}".format(config, data))
    app.do_train("--config {} --set data_dir={} --set aggregator=average --set use_reg=false".format(config, data))

    query = str(tmp_path / 'query.stae')
    app.do_extract("--checkpoint {} --data {} --out {}".format(checkpoint, data, query))
    assert os.path.isfile(query)

    tracklet = sorted(name for name in os.listdir(data) if name[0].isdigit())[0]
    scores = str(tmp_path / 'scores.csv')
    app.do_dump_attention("--checkpoint {} --tracklet {} --out {}".format(
        checkpoint, os.path.join(data, tracklet), scores))
    assert len(pandas.read_csv(scores)) == 16
    app.do_eval("--checkpoint {}".format(checkpoint))
    assert app.exit_code == 0

    app.do_eval("--checkpoint {} --set aggregator=sta".format(checkpoint))
    assert app.exit_code == 1


def test_cli_experiment_commands(tmp_path):
    config = _create_config(tmp_path)
    checkpoint = str(tmp_path / 'sta.ckpt')
    app = StaApp()
    app.do_train("--config {}".format(config))

    ablation = str(tmp_path / 'ablation.csv')
    app.do_ablate("--config {} --arms baseline_tl_avg,baseline_tl_sta --seeds 1 --out {}".format(config, ablation))
    assert pandas.read_csv(ablation)['arm'].tolist() == ['baseline_tl_avg', 'baseline_tl_sta']

    lengths = str(tmp_path / 'lengths.csv')
    app.do_sweep_length("--config {} --checkpoint {} --lengths 2,6 --out {}".format(config, checkpoint, lengths))
    assert pandas.read_csv(lengths)['test_frames'].tolist() == [2, 6]

    regions = str(tmp_path / 'regions.csv')
    app.do_sweep_regions("--config {} --regions 2,4 --seeds 1 --out {}".format(config, regions))
    assert pandas.read_csv(regions)['k_regions'].tolist() == [2, 4]

    cases = str(tmp_path / 'localize.csv')
    app.do_localize("--config {} --checkpoint {} --cases 5 --out {}".format(config, checkpoint, cases))
    assert len(pandas.read_csv(cases)) == 5

    assert app.exit_code == 0


def test_cli_reports_errors(tmp_path):
    app = StaApp()
    app.do_eval("--checkpoint {}".format(tmp_path / 'missing.ckpt'))
    assert app.exit_code == 1

    app = StaApp()
    app.do_train("--set frames_per_clip=1")
    assert app.exit_code == 1


def test_main_runs_dashed_commands(tmp_path):
    config = _create_config(tmp_path)
    with pytest.raises(SystemExit) as exit_info:
        main(['--log-level', 'warning', 'synth', '--config', config, '--out', str(tmp_path / 'data')])
    assert exit_info.value.code == 0
    assert os.path.isfile(str(tmp_path / 'data' / 'manifest.csv'))

    with pytest.raises(SystemExit) as exit_info:
        main(['train', '--config', config])
    assert exit_info.value.code == 0

    with pytest.raises(SystemExit) as exit_info:
        main(['dump-attention', '--config', config, '--checkpoint', str(tmp_path / 'sta.ckpt'),
              '--tracklet', str(tmp_path / 'missing_dir'), '--out', str(tmp_path / 'scores.csv')])
    assert exit_info.value.code == 1
