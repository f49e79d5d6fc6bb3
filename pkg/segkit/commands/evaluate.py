import argparse
import logging
from pathlib import Path
from typing import Optional

from segkit.commands.common import (
    add_config_arguments,
    add_run_arguments,
    checkpoint_path,
    resolve_config,
    resolve_threshold,
    run_directory,
    split_examples,
)
from segkit.config import device, write_resolved_config
from segkit.evaluation import evaluate_predictions
from segkit.records.checkpoint import load_checkpoint, restore_model
from segkit.records.metrics import corpus_metric_records, utterance_metric_records
from segkit.reporting import format_evaluation_report
from segkit.schemas.records import CorpusMetricRecord
from segkit.schemas.run import RunConfig
from segkit.training import BEST_CHECKPOINT, predict

logger = logging.getLogger(__name__)

REPORT_FILE = "report.txt"


def evaluation_dir(run_dir: Path, split: str) -> Path:
    return run_dir / f"eval-{split}"


def run_evaluate(
    config: RunConfig,
    run_dir: Optional[Path] = None,
    split: str = "test",
    checkpoint: Optional[Path] = None,
    threshold: Optional[float] = None,
    label: Optional[str] = None,
) -> CorpusMetricRecord:
    """
    Decode ``split`` and score it under every configured scheme.

    Writes ``utterances.jsonl``, ``corpus.jsonl`` and ``report.txt`` into
    ``<run>/eval-<split>/``.
    """
    run_dir = Path(run_dir or config.run_dir)
    checkpoint = Path(checkpoint or run_dir / BEST_CHECKPOINT)
    out_dir = evaluation_dir(run_dir, split)
    write_resolved_config(config, out_dir)

    stored = load_checkpoint(checkpoint)
    model = restore_model(stored, device())
    nu = resolve_threshold(threshold, run_dir)
    entries, examples = split_examples(config, split)
    predictions = predict(model, examples, nu)
    result = evaluate_predictions(
        [entry.utterance_id for entry in entries],
        [example.boundaries for example in examples],
        predictions,
        config.tolerance,
        config.schemes,
        config.aggregation,
        split,
        nu,
    )

    record = CorpusMetricRecord(
        run=config.name,
        variant="ar" if model.autoregressive else "non-ar",
        split=split,
        seed=int(stored.meta.get("train", {}).get("rng_seed", config.seed)),
        threshold=nu,
        gamma_frames=config.tolerance.gamma_frames,
        aggregation=config.aggregation,
        duplicate_rate=result.duplicate_rate,
        r_value_dominance_violations=result.r_value_dominance_violations,
        include_edges=config.include_edges,
        label=label or config.name,
        scores=result.corpus,
    )
    utterance_metric_records.write(utterance_metric_records.path(out_dir), result.utterances)
    corpus_metric_records.write(corpus_metric_records.path(out_dir), [record])
    (out_dir / REPORT_FILE).write_text(format_evaluation_report(record), encoding="utf-8")
    return record


def handle(args: argparse.Namespace) -> None:
    schemes = [args.scheme] if args.scheme else None
    config = resolve_config(args, schemes=schemes)
    run_dir = run_directory(args, config)
    args.breadcrumb = run_dir
    record = run_evaluate(config, run_dir, args.split, checkpoint_path(args, run_dir), args.nu, args.label)
    print(format_evaluation_report(record), end="")


def register(subparsers) -> None:
    parser = subparsers.add_parser("evaluate", help="score a checkpoint under both evaluation schemes")
    add_config_arguments(parser)
    add_run_arguments(parser)
    parser.add_argument("--split", choices=("train", "val", "test"), default="test")
    parser.add_argument("--nu", type=float, help="decision threshold (default: threshold.json)")
    parser.add_argument("--scheme", choices=("conventional", "proposed"), help="score one scheme only")
    parser.add_argument("--label", help="group label used by `segkit report`")
    parser.set_defaults(handler=handle)
