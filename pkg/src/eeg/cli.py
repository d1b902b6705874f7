"""Command-line entry point.

    eeg run [--config FILE] [--<config-key> VALUE ...]
    eeg replicate | ablate-features | ablate-components  (same options)
    eeg gen-data --out FILE [--n N] [--seed S] [--noise P]
    eeg verify [--seed S]

Every config key has a matching ``--key-name`` flag (underscores become
dashes) whose value is parsed as JSON, falling back to a plain string.
Exit status is 0 on success and 1 on failure, with a stage-tagged message on
stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

from .config import ConfigError, ExperimentConfig, load_config, parse_override
from .dataset import DataError, gen_complementary_2d, save_dataset
from .experiment import (StageError, replicate, run_component_ablation, run_experiment,
                         run_feature_ablation)
from .verify import run_all


def _config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config key")
    for f in dataclasses.fields(ExperimentConfig):
        p.add_argument("--" + f.name.replace("_", "-"), dest="cfg_" + f.name, metavar="VALUE",
                       default=None)


def _resolve(args) -> ExperimentConfig:
    overrides = dict(parse_override(s) for s in args.set)
    for f in dataclasses.fields(ExperimentConfig):
        raw = getattr(args, "cfg_" + f.name)
        if raw is not None:
            overrides[f.name] = parse_override(f"{f.name}={raw}")[1]
    return load_config(args.config, overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eeg", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "one full experiment"),
                        ("replicate", "repeat over the configured seeds"),
                        ("ablate-features", "compare allocator feature sets"),
                        ("ablate-components", "individual vs combined component selection")):
        _config_args(sub.add_parser(name, help=help_))
    gen = sub.add_parser("gen-data", help="write the synthetic complementary task as CSV")
    gen.add_argument("--out", required=True)
    gen.add_argument("--n", type=int, default=5000)
    gen.add_argument("--seed", type=int, default=1)
    gen.add_argument("--noise", type=float, default=0.0)
    ver = sub.add_parser("verify", help="brute-force optimality checks")
    ver.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "gen-data":
            save_dataset(gen_complementary_2d(args.n, args.seed, args.noise), args.out)
            print(f"wrote {args.out}")
            return 0
        if args.command == "verify":
            results = run_all(args.seed)
            for r in results:
                print(r.line())
            return 0 if all(r.passed for r in results) else 1
        cfg = _resolve(args)
        if args.command == "run":
            art = run_experiment(cfg)
            print(json.dumps({k: art.report[k] for k in
                              ("auc", "ppcr", "pqeom", "pqom", "pcfa", "tqm95", "max_acc",
                               "argmax_q", "s_acc")}, indent=2))
            print(f"artifacts in {art.out_dir}")
        elif args.command == "replicate":
            summary = replicate(cfg)
            for key, m in summary["metrics"].items():
                text = "undefined" if m["mean"] is None else f"{100 * m['mean']:.1f} ± {100 * m['sd']:.1f}"
                print(f"{key:10s} {text}")
        elif args.command == "ablate-features":
            for row in run_feature_ablation(cfg):
                print(f"{row['feature_set']:22s} AUC {row['auc']:.4f}")
        else:
            row = run_component_ablation(cfg)
            print(json.dumps(row, indent=2))
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, DataError) as exc:
        print(f"error: [config] {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
