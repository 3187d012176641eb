"""Command-line entry point: ``mcsgm <experiment> --config FILE``."""
from __future__ import annotations

import argparse
import logging
import sys

import yaml

from .errors import InvalidArgument, InvalidConfiguration
from .harness import EXPERIMENT_KINDS, load_config, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcsgm", description="Markov-chain SGD/SGDA experiments")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for kind in EXPERIMENT_KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} experiment")
        p.add_argument("--config", required=True, help="YAML experiment config")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--threads", type=int, default=1, help="worker threads over grid points")
        p.add_argument("--validate", action="store_true", help="resolve the config and exit")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, {"kind": args.experiment, "master_seed": args.seed, "output": args.out})
    except (InvalidConfiguration, InvalidArgument, OSError, yaml.YAMLError) as exc:
        print(f"mcsgm: invalid configuration: {exc}", file=sys.stderr)
        return 2
    if args.validate:
        print(yaml.safe_dump(cfg.to_dict(), sort_keys=False), end="")
        print(f"# config_sha256={cfg.config_hash}")
        return 0
    try:
        result = run_experiment(cfg, threads=args.threads)
    except Exception as exc:
        print(f"mcsgm: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(result.rows)} rows to {result.out_dir / 'results.csv'}")
    for name, fit in result.fits.items():
        if "slope" in fit:
            print(f"fit {name}: slope={fit['slope']:.4f} r2={fit['r_squared']:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
