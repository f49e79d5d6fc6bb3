#!/usr/bin/env python3
"""
End-to-end benchmark on a generated corpus.

Synthesizes the corpus, prepares features, trains the autoregressive and the
non-autoregressive detector, tunes each threshold on the validation split and
evaluates both on the test split. Passes when the AR model reaches the target
proposed-scheme R-value and the non-AR model loses more R-value than the AR model
when switching from conventional to proposed counting.
"""

import argparse
import sys
from pathlib import Path

from segkit.commands.evaluate import run_evaluate
from segkit.commands.prepare import format_statistics, run_prepare
from segkit.commands.synth import run_synth
from segkit.commands.train import run_train
from segkit.commands.tune import run_tune
from segkit.config import configure_logging, derive, load_run_config
from segkit.records.manifest import manifest_records
from segkit.reporting import format_evaluation_report, r_value_gap

DEFAULT_CONFIG = Path(__file__).with_name("synthetic_run.yaml")
TARGET_R_VALUE = 0.90
VARIANTS = (("ar", True), ("non-ar", False))


def main():
    parser = argparse.ArgumentParser(description="Synthetic end-to-end benchmark (AR vs non-AR)")
    parser.add_argument("--config", type=Path, default=DEFAULT_CONFIG, help="YAML run config")
    parser.add_argument("--epochs", type=int, help="override train.max_epochs")
    parser.add_argument("--target", type=float, default=TARGET_R_VALUE, help="required AR test R-value")
    args = parser.parse_args()

    configure_logging()
    config = load_run_config(args.config)
    if args.epochs is not None:
        config = derive(config, train={"max_epochs": args.epochs})

    corpus_root = config.paths.corpus_root
    if not manifest_records.path(corpus_root).is_file():
        print(f"Synthesizing {config.synthetic.n_utterances} utterances into {corpus_root}...")
        run_synth(config)
    print(format_statistics(run_prepare(config)))
    print()

    records = {}
    for variant, autoregressive in VARIANTS:
        variant_config = derive(config, name=f"{config.name}-{variant}", model={"autoregressive": autoregressive})
        print(f"Training {variant_config.name}...")
        run_train(variant_config)
        choice = run_tune(variant_config)
        print(f"   threshold {choice.threshold:.2f}")
        records[variant] = run_evaluate(variant_config, label=variant_config.name)
        print(format_evaluation_report(records[variant]))

    ar_score = records["ar"].score("proposed").r_value
    ar_gap, non_ar_gap = r_value_gap(records["ar"]), r_value_gap(records["non-ar"])
    checks = {
        f"AR proposed R-value {ar_score:.4f} >= {args.target:.2f}": ar_score >= args.target,
        f"non-AR gap {non_ar_gap:.4f} > AR gap {ar_gap:.4f}": non_ar_gap > ar_gap,
    }
    for description, passed in checks.items():
        print(f"{'PASS' if passed else 'FAIL'}  {description}")
    return 0 if all(checks.values()) else 1


if __name__ == "__main__":
    sys.exit(main())
