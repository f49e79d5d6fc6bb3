#!/usr/bin/env python3
"""
Train, tune and evaluate one configuration under several seeds, then aggregate the
test results into a mean ± std report with `segkit report`.
"""

import argparse
import sys
from pathlib import Path

from segkit.commands.evaluate import evaluation_dir, run_evaluate
from segkit.commands.report import run_report
from segkit.commands.train import run_train
from segkit.commands.tune import run_tune
from segkit.config import configure_logging, derive, load_run_config


def main():
    parser = argparse.ArgumentParser(description="Seed sweep over a prepared corpus")
    parser.add_argument("--config", type=Path, required=True, help="YAML run config")
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    parser.add_argument("--non-ar", action="store_true", help="sweep the non-autoregressive variant")
    parser.add_argument("--epochs", type=int, help="override train.max_epochs")
    args = parser.parse_args()

    configure_logging()
    config = load_run_config(args.config)
    changes = {"model": {"autoregressive": not args.non_ar}}
    if args.epochs is not None:
        changes["train"] = {"max_epochs": args.epochs}
    label = f"{config.name}-{'non-ar' if args.non_ar else 'ar'}"

    evaluations = []
    for seed in args.seeds:
        seed_config = derive(config, name=f"{label}-s{seed}", seed=seed, **changes)
        print(f"Seed {seed}: {seed_config.run_dir}")
        run_train(seed_config)
        run_tune(seed_config)
        run_evaluate(seed_config, label=label)
        evaluations.append(evaluation_dir(seed_config.run_dir, "test"))

    print(run_report(derive(config, name=label), evaluations), end="")
    return 0


if __name__ == "__main__":
    sys.exit(main())
