"""``dynaperc <kind> --config PATH [--seed N] [--workers N] [--out DIR]``."""

from __future__ import annotations

import argparse
import json
import os
import sys

from .experiments import KINDS, ConfigError, ExperimentConfig, emit_plot_data, run


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dynaperc", description="Random walk on dynamical percolation experiments.")
    ap.add_argument("kind", choices=KINDS)
    ap.add_argument("--config", required=True, help="JSON config file")
    ap.add_argument("--seed", type=int, help="overrides the config seed (DYNAPERC_SEED overrides both)")
    ap.add_argument("--workers", type=int)
    ap.add_argument("--out")
    ap.add_argument("--plot-data", action="store_true", help="also write plot_data.csv and plot.py")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.load(args.config, args.kind)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if os.environ.get("DYNAPERC_SEED"):
            overrides["seed"] = int(os.environ["DYNAPERC_SEED"])
        if args.workers is not None:
            overrides["workers"] = args.workers
        if args.out:
            overrides["out"] = args.out
        if overrides:
            cfg = ExperimentConfig.from_dict({**cfg.params, **overrides}, cfg.kind)
    except (ConfigError, ValueError) as exc:
        print(f"dynaperc: error: {exc}", file=sys.stderr)
        return 2
    man = run(cfg)
    if args.plot_data and man.cells:
        try:
            emit_plot_data(man, cfg["out"])
        except ValueError:
            pass
    for a in man.assertions:
        print(json.dumps({"assertion": a["name"], "pass": a["pass"], "value": a["value"]}, default=str))
    print(f"wrote {len(man.files)} files to {cfg['out']} ({'pass' if man.passed else 'FAIL'})")
    return 0 if man.passed else 1


if __name__ == "__main__":
    sys.exit(main())
