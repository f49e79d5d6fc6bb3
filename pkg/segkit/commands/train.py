import argparse
import logging

from segkit.augment import Augmenter
from segkit.commands.common import add_config_arguments, resolve_config, split_examples
from segkit.config import device, write_resolved_config
from segkit.schemas.run import RunConfig
from segkit.training import Trainer, TrainResult

logger = logging.getLogger(__name__)


def run_train(config: RunConfig, resume: bool = True) -> TrainResult:
    """Train on the prepared train split, validating on val; resumes from ``last.ckpt`` when present."""
    run_dir = config.run_dir
    write_resolved_config(config, run_dir)
    augmenter = Augmenter(config.train.augment)
    _, train_set = split_examples(config, "train", keep_audio=augmenter.touches_audio)
    _, val_set = split_examples(config, "val")
    trainer = Trainer(
        config.model,
        config.train,
        grid=config.grid,
        tolerance=config.tolerance,
        run_dir=run_dir,
        device=device(),
        augmenter=augmenter,
    )
    result = trainer.train(train_set, val_set, resume=resume)
    logger.info("best epoch %d (validation %.4f), checkpoints in %s", result.best_epoch, result.best_metric, run_dir)
    return result


def handle(args: argparse.Namespace) -> None:
    model = {"autoregressive": False} if args.non_ar else None
    train = {"max_epochs": args.epochs} if args.epochs is not None else None
    config = resolve_config(args, model=model, train=train)
    args.breadcrumb = config.run_dir
    result = run_train(config, resume=not args.fresh)
    print(f"trained {len(result.history)} epoch(s); best epoch {result.best_epoch} "
          f"(validation R-value {result.best_metric:.4f}) in {config.run_dir}")


def register(subparsers) -> None:
    parser = subparsers.add_parser("train", help="train SuperSeg on the prepared corpus")
    add_config_arguments(parser)
    parser.add_argument("--non-ar", action="store_true", help="train without the boundary embedder")
    parser.add_argument("--epochs", type=int, help="maximum number of epochs")
    parser.add_argument("--fresh", action="store_true", help="ignore an existing last.ckpt")
    parser.set_defaults(handler=handle)
