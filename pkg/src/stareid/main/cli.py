from __future__ import print_function
import argparse
import logging
import os
import shlex
import sys
from os.path import isfile, join

import cmd2

from stareid.controller import experiments
from stareid.controller import harness
from stareid.controller.checkpoint import load_checkpoint
from stareid.datasets.loader import MANIFEST
from stareid.datasets.loader import read_dataset
from stareid.datasets.loader import read_tracklet
from stareid.datasets.loader import write_dataset
from stareid.datasets.synthetic import synth_generate
from stareid.profiles.config import load_run_config

logger = logging.getLogger(__name__)


def _overrides(pairs):
    values = {}
    for pair in pairs or []:
        if '=' not in pair:
            raise ValueError("--set expects key=value, got {!r}.".format(pair))
        key, value = pair.split('=', 1)
        values[key.strip()] = value.strip()
    return values


def _config_parser():
    parser = argparse.ArgumentParser()
    parser.add_argument('--config', help="flat JSON or key=value run configuration", type=str, default=None)
    parser.add_argument('--set', help="override one configuration key (key=value, repeatable)",
                        action='append', default=[], metavar='KEY=VALUE')
    return parser


def _ints(text):
    return [int(part) for part in text.split(',') if part]


class StaApp(cmd2.Cmd):

    def __init__(self):
        super().__init__(allow_cli_args=False)
        self.intro = "stareid: spatial-temporal attention for video person re-identification."
        self.prompt = "sta $ "
        self.exit_code = 0

    def _config(self, args, **values):
        values.update(_overrides(args.set))
        return load_run_config(args.config, **values)

    def _checkpoint_config(self, args):
        checkpoint = load_checkpoint(args.checkpoint)
        return checkpoint, harness.config_from_checkpoint(checkpoint, args.config, **_overrides(args.set))

    def _fail(self, error):
        logger.error(error)
        self.perror("error: {}".format(error))
        self.exit_code = 1

    def _write_frame(self, frame, path):
        if path:
            frame.to_csv(path, index=False)
            logger.info("Wrote {} rows to {}.".format(len(frame), path))
        self.poutput(frame.to_string(index=False))

    train_parser = _config_parser()
    train_parser.add_argument('--resume', help="checkpoint to continue training from", type=str, default=None)

    @cmd2.with_argparser(train_parser)
    def do_train(self, args):
        """Train a model; writes the checkpoint and loss_history.csv."""
        try:
            cfg = self._config(args)
            checkpoint, history = harness.train(cfg, resume=args.resume)
        except (ValueError, OSError) as e:
            return self._fail(e)
        self.poutput(history.to_string(index=False))

    eval_parser = _config_parser()
    eval_parser.add_argument('--checkpoint', help="trained checkpoint", type=str, default=None)
    eval_parser.add_argument('--test-n', help="frames per test clip (default: test_frames)", type=int, default=None)
    eval_parser.add_argument('--split', help="test (query vs gallery) or train", choices=['test', 'train'],
                             default='test')
    eval_parser.add_argument('--query-embeddings', help="STAE file of query embeddings", type=str, default=None)
    eval_parser.add_argument('--gallery-embeddings', help="STAE file of gallery embeddings", type=str, default=None)
    eval_parser.add_argument('--out', help="also write the report as CSV", type=str, default=None)

    @cmd2.with_argparser(eval_parser)
    def do_eval(self, args):
        """Evaluate a checkpoint, or two embeddings files, and print the retrieval report."""
        try:
            if args.query_embeddings or args.gallery_embeddings:
                if not (args.query_embeddings and args.gallery_embeddings):
                    raise ValueError("--query-embeddings and --gallery-embeddings go together.")
                cfg = self._config(args)
                report = harness.evaluate_embeddings(args.query_embeddings, args.gallery_embeddings,
                                                     normalize=cfg.normalize_embeddings)
            else:
                if not args.checkpoint:
                    raise ValueError("eval needs --checkpoint or a pair of embeddings files.")
                checkpoint, cfg = self._checkpoint_config(args)
                report = harness.evaluate(cfg, checkpoint, split=args.split, test_frames=args.test_n)
            if args.out:
                report.to_frame().to_csv(args.out, index=False)
        except (ValueError, OSError) as e:
            return self._fail(e)
        self.poutput(report.to_lines())

    extract_parser = _config_parser()
    extract_parser.add_argument('--checkpoint', help="trained checkpoint", type=str, required=True)
    extract_parser.add_argument('--data', help="dataset root or a single tracklet directory", type=str,
                                required=True)
    extract_parser.add_argument('--split', help="dataset split to export when --data is a dataset root",
                                choices=['query', 'gallery', 'train'], default='query')
    extract_parser.add_argument('--out', help="STAE output file", type=str, required=True)

    @cmd2.with_argparser(extract_parser)
    def do_extract(self, args):
        """Export tracklet embeddings as an STAE file."""
        try:
            checkpoint, cfg = self._checkpoint_config(args)
            if isfile(join(args.data, MANIFEST)):
                tracklets = getattr(read_dataset(args.data), args.split)
            else:
                tracklets = [read_tracklet(args.data)]
            harness.extract(cfg, checkpoint, tracklets, args.out)
        except (ValueError, OSError) as e:
            return self._fail(e)
        self.poutput("Wrote {} embeddings to {}.".format(len(tracklets), args.out))

    attention_parser = _config_parser()
    attention_parser.add_argument('--checkpoint', help="trained checkpoint", type=str, required=True)
    attention_parser.add_argument('--tracklet', help="tracklet directory", type=str, required=True)
    attention_parser.add_argument('--out', help="CSV output file", type=str, required=True)

    @cmd2.with_argparser(attention_parser)
    def do_dump_attention(self, args):
        """Write the attention score matrix of one tracklet as frame_index,region_index,score rows."""
        try:
            checkpoint, cfg = self._checkpoint_config(args)
            frame = harness.dump_attention(cfg, checkpoint, read_tracklet(args.tracklet), args.out)
        except (ValueError, OSError) as e:
            return self._fail(e)
        self.poutput(frame.to_string(index=False))

    synth_parser = _config_parser()
    synth_parser.add_argument('--out', help="dataset root to create", type=str, required=True)

    @cmd2.with_argparser(synth_parser)
    def do_synth(self, args):
        """Generate the synthetic occlusion benchmark on disk."""
        try:
            cfg = self._config(args)
            dataset = synth_generate(cfg.synth_config())
            os.makedirs(args.out, exist_ok=True)
            write_dataset(dataset, args.out)
        except (ValueError, OSError) as e:
            return self._fail(e)
        self.poutput("Wrote {} train / {} query / {} gallery tracklets to {}.".format(
            len(dataset.train), len(dataset.query), len(dataset.gallery), args.out))

    ablate_parser = _config_parser()
    ablate_parser.add_argument('--arms', help="comma-separated profiles (default: all six)", type=str,
                               default=','.join(experiments.ABLATION_ARMS))
    ablate_parser.add_argument('--seeds', help="comma-separated seeds", type=_ints,
                               default=list(experiments.DEFAULT_SEEDS))
    ablate_parser.add_argument('--out', help="CSV of per-run results", type=str, default=None)

    @cmd2.with_argparser(ablate_parser)
    def do_ablate(self, args):
        """Train and evaluate every ablation arm over several seeds."""
        try:
            cfg = self._config(args)
            arms = [arm for arm in args.arms.split(',') if arm]
            results = experiments.run_ablation(cfg, arms, args.seeds)
        except (ValueError, OSError) as e:
            return self._fail(e)
        self._write_frame(results, args.out)
        self.poutput(experiments.summarize(results, 'arm').to_string())

    length_parser = _config_parser()
    length_parser.add_argument('--checkpoint', help="trained checkpoint", type=str, required=True)
    length_parser.add_argument('--lengths', help="comma-separated clip lengths", type=_ints,
                               default=list(experiments.DEFAULT_LENGTHS))
    length_parser.add_argument('--out', help="CSV of per-length results", type=str, default=None)

    @cmd2.with_argparser(length_parser)
    def do_sweep_length(self, args):
        """Evaluate one checkpoint at several test-time clip lengths."""
        try:
            checkpoint, cfg = self._checkpoint_config(args)
            results = experiments.sequence_length_sweep(cfg, checkpoint, args.lengths)
        except (ValueError, OSError) as e:
            return self._fail(e)
        self._write_frame(results, args.out)

    regions_parser = _config_parser()
    regions_parser.add_argument('--regions', help="comma-separated region counts", type=_ints,
                                default=list(experiments.DEFAULT_REGIONS))
    regions_parser.add_argument('--seeds', help="comma-separated seeds", type=_ints,
                                default=list(experiments.DEFAULT_SEEDS))
    regions_parser.add_argument('--out', help="CSV of per-run results", type=str, default=None)

    @cmd2.with_argparser(regions_parser)
    def do_sweep_regions(self, args):
        """Train and evaluate the full model for several region counts."""
        try:
            cfg = self._config(args)
            results = experiments.region_count_sweep(cfg, args.regions, args.seeds)
        except (ValueError, OSError) as e:
            return self._fail(e)
        self._write_frame(results, args.out)
        self.poutput(experiments.summarize(results, 'k_regions').to_string())

    localize_parser = _config_parser()
    localize_parser.add_argument('--checkpoint', help="trained checkpoint", type=str, required=True)
    localize_parser.add_argument('--cases', help="number of occluded clips", type=int, default=100)
    localize_parser.add_argument('--out', help="CSV of per-case results", type=str, default=None)

    @cmd2.with_argparser(localize_parser)
    def do_localize(self, args):
        """Check that an occluded region gets the lowest attention score of its column."""
        try:
            checkpoint, cfg = self._checkpoint_config(args)
            results = experiments.attention_localization(cfg, checkpoint, args.cases)
        except (ValueError, OSError) as e:
            return self._fail(e)
        if args.out:
            results.to_csv(args.out, index=False)
        self.poutput("hit rate = {!r} over {} cases".format(
            float(results['hit'].mean()) if len(results) else 0.0, len(results)))


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument('--log-level', type=str, default='INFO')
    options, command = parser.parse_known_args(argv)
    logging.basicConfig(level=options.log_level.upper(),
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')

    app = StaApp()
    if not command:
        sys.exit(app.cmdloop())

    # Subcommands are spelled with dashes on the command line.
    command[0] = command[0].replace('-', '_')
    app.onecmd_plus_hooks(' '.join(shlex.quote(token) for token in command))
    sys.exit(app.exit_code)


if __name__ == "__main__":
    main()
