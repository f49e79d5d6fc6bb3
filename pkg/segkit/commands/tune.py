import argparse
import logging
from pathlib import Path
from typing import Optional

from segkit.commands.common import (
    add_config_arguments,
    add_run_arguments,
    checkpoint_path,
    resolve_config,
    run_directory,
    split_examples,
    write_threshold,
)
from segkit.config import device, write_resolved_config
from segkit.records.checkpoint import load_checkpoint, restore_model
from segkit.records.metrics import threshold_curve_records
from segkit.schemas.records import ThresholdChoice, ThresholdCurveRecord
from segkit.schemas.run import RunConfig
from segkit.training import BEST_CHECKPOINT, DEFAULT_THRESHOLD_GRID, select_threshold, threshold_curve

logger = logging.getLogger(__name__)

TUNE_DIR = "tune"


def run_tune(
    config: RunConfig,
    run_dir: Optional[Path] = None,
    checkpoint: Optional[Path] = None,
    metric: Optional[str] = None,
) -> ThresholdChoice:
    """Grid-search the decision threshold on the validation split and write ``threshold.json``."""
    run_dir = Path(run_dir or config.run_dir)
    checkpoint = Path(checkpoint or run_dir / BEST_CHECKPOINT)
    metric = metric or config.train.threshold_metric
    tune_dir = run_dir / TUNE_DIR
    write_resolved_config(config, tune_dir)

    model = restore_model(load_checkpoint(checkpoint), device())
    _, val_set = split_examples(config, "val")
    grid = config.threshold_grid or DEFAULT_THRESHOLD_GRID
    curve = threshold_curve(model, val_set, config.tolerance, metric, grid, config.aggregation)
    selected = select_threshold(curve)

    threshold_curve_records.write(
        threshold_curve_records.path(tune_dir),
        [
            ThresholdCurveRecord(threshold=threshold, metric=metric, value=value, selected=threshold == selected)
            for threshold, value in curve
        ],
    )
    choice = ThresholdChoice(
        threshold=selected,
        metric=metric,
        value=dict(curve)[selected],
        gamma_frames=config.tolerance.gamma_frames,
        checkpoint=checkpoint.name,
    )
    write_threshold(run_dir, choice)
    logger.info("selected threshold %.2f (%s %.4f)", choice.threshold, metric, choice.value)
    return choice


def handle(args: argparse.Namespace) -> None:
    config = resolve_config(args)
    run_dir = run_directory(args, config)
    args.breadcrumb = run_dir
    metric = f"r_value_{args.scheme}" if args.scheme else None
    choice = run_tune(config, run_dir, checkpoint_path(args, run_dir), metric)
    print(f"threshold {choice.threshold:.2f}: validation {choice.metric} {choice.value:.4f}")


def register(subparsers) -> None:
    parser = subparsers.add_parser("tune", help="grid-search the decision threshold on the validation split")
    add_config_arguments(parser)
    add_run_arguments(parser)
    parser.add_argument("--scheme", choices=("conventional", "proposed"), help="scheme of the tuned R-value")
    parser.set_defaults(handler=handle)
