"""Batch command-line interface.

Subcommands
-----------
estimate   one seeded estimation drop; factor CSV plus a JSON run summary
predict    prediction-NMSE experiment (trains a toy classifier inline)
sweep      NMSE sweep over SNR or training blocks, per the config scenario
overhead   pilot-overhead table over the architecture grid
sumrate    average downlink sum rate per CSI scheme
train-cnn  train the Doppler classifier; saves weights and the AR bank

Every subcommand takes ``--config`` (INI file, see ``bdris.config``) and
honors ``--seed``, ``--drops``, ``--output`` and ``--parallelism``
overrides; ``--validate`` dry-runs the configuration checks only.
"""

import argparse
import sys

from . import bundle_io, experiments
from .bals import Tucker2Bals
from .channel import generate_channel_set, probe_anchor, simulate_training
from .config import load_config
from .reflections import build_training_book, validate_identifiability


def _add_common(parser):
    parser.add_argument("--config", required=True, help="INI config file")
    parser.add_argument("--seed", type=int, help="override [system] seed")
    parser.add_argument("--drops", type=int, help="override Monte-Carlo drops")
    parser.add_argument("--output", help="override the output CSV path")
    parser.add_argument("--parallelism", type=int, help="worker processes")
    parser.add_argument("--validate", action="store_true",
                        help="only validate the configuration, run nothing")


def build_parser():
    parser = argparse.ArgumentParser(prog="bdris", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("estimate", "predict", "sweep", "overhead", "sumrate",
                 "train-cnn"):
        _add_common(sub.add_parser(name))
    return parser


def _load_spec(args):
    spec = load_config(args.config)
    if args.seed is not None:
        spec.system = spec.system.with_updates(seed=args.seed)
    if args.drops is not None:
        spec.drops = args.drops
    if args.output is not None:
        spec.output = args.output
    if args.parallelism is not None:
        spec.parallelism = args.parallelism
    spec.validate()
    return spec


def _validate_only(spec):
    report = validate_identifiability(spec.system)
    if not report:
        raise ValueError(f"identifiability check failed: {report.message}")
    for t in spec.t_list:
        sub = validate_identifiability(spec.system.with_updates(n_blocks=int(t)))
        if not sub:
            raise ValueError(f"identifiability check failed at T={t}: {sub.message}")
    print("configuration ok")


def _cmd_estimate(spec):
    import numpy as np
    cfg = spec.system
    rng = np.random.default_rng([cfg.seed, experiments._SALT_CHANNEL, 0])
    channels = generate_channel_set(cfg, rng, n_intervals=1)
    book = build_training_book(cfg, rng)
    rng_noise = np.random.default_rng([cfg.seed, experiments._SALT_NOISE, 0])
    obs = simulate_training(channels, book, 1, cfg.snr_db, rng_noise)
    est = Tucker2Bals(book).fit(obs.Y)
    est.resolve_scaling(probe_anchor(channels, cfg.group_size))
    summary_path = spec.output.rsplit(".", 1)[0] + "_summary.json"
    bundle_io.export_estimate(spec.output, est, summary_path)
    print(f"wrote {spec.output} and {summary_path}")


def _cmd_train_cnn(spec):
    clf, bank = experiments.train_bank_classifier(spec.system,
                                                  **spec.cnn_options)
    weights_path = spec.output.rsplit(".", 1)[0] + "_weights.bin"
    bank_path = spec.output.rsplit(".", 1)[0] + "_bank.csv"
    bundle_io.save_network(weights_path, clf.network_)
    bundle_io.save_pattern_bank(bank_path, bank)
    print(f"wrote {weights_path} and {bank_path}")


_SWEEPS = {"nmse_vs_snr": experiments.run_nmse_vs_snr,
           "nmse_vs_t": experiments.run_nmse_vs_t}


def _run(args):
    spec = _load_spec(args)
    if args.validate:
        _validate_only(spec)
        return
    if args.command == "estimate":
        _cmd_estimate(spec)
        return
    if args.command == "train-cnn":
        _cmd_train_cnn(spec)
        return
    if args.command == "sweep":
        runner = _SWEEPS.get(spec.scenario)
        if runner is None:
            raise ValueError(
                f"sweep needs scenario nmse_vs_snr or nmse_vs_t, got "
                f"{spec.scenario!r}")
    elif args.command == "predict":
        runner = experiments.run_prediction
    elif args.command == "overhead":
        runner = experiments.run_overhead
    else:
        runner = experiments.run_sumrate
    fields, rows, _ = runner(spec)
    bundle_io.write_rows(spec.output, fields, rows)
    print(f"wrote {spec.output} ({len(rows)} rows)")


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        _run(args)
    except (ValueError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
