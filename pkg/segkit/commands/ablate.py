import argparse
import logging
from pathlib import Path
from typing import List, Tuple

from segkit.commands.common import add_config_arguments, resolve_config
from segkit.commands.evaluate import run_evaluate
from segkit.commands.train import run_train
from segkit.commands.tune import run_tune
from segkit.config import derive, write_resolved_config
from segkit.reporting import format_ablation_table
from segkit.schemas.records import CorpusMetricRecord
from segkit.schemas.run import RunConfig
from segkit.tracing import get_tracer

logger = logging.getLogger(__name__)
tracer = get_tracer()

# (frequency mask, pitch/formant perturbation)
ABLATION_CELLS: Tuple[Tuple[bool, bool], ...] = (
    (False, False),
    (True, False),
    (False, True),
    (True, True),
)
ABLATION_FILE = "ablation.txt"


def cell_config(config: RunConfig, out_dir: Path, freq_mask: bool, pitch_formant: bool) -> RunConfig:
    return derive(
        config,
        name=f"{config.name}-fm{int(freq_mask)}-pf{int(pitch_formant)}",
        paths={"output_dir": str(out_dir)},
        train={"augment": {"freq_mask_enabled": freq_mask, "pitch_formant_enabled": pitch_formant}},
    )


def run_ablation(config: RunConfig, split: str = "test") -> str:
    """Train, tune and evaluate the four augmentation cells; returns the table text."""
    out_dir = config.paths.output_dir / f"{config.name}-ablation"
    write_resolved_config(config, out_dir)
    cells: List[Tuple[bool, bool, CorpusMetricRecord]] = []
    with tracer.start_as_current_span("augmentation-ablation") as span:
        for freq_mask, pitch_formant in ABLATION_CELLS:
            cell = cell_config(config, out_dir, freq_mask, pitch_formant)
            logger.info("ablation cell %s", cell.name)
            run_train(cell)
            run_tune(cell)
            cells.append((freq_mask, pitch_formant, run_evaluate(cell, split=split, label=cell.name)))
            span.add_event("cell", {"name": cell.name})
    text = format_ablation_table(cells)
    (out_dir / ABLATION_FILE).write_text(text, encoding="utf-8")
    return text


def handle(args: argparse.Namespace) -> None:
    train = {"max_epochs": args.epochs} if args.epochs is not None else None
    config = resolve_config(args, train=train)
    args.breadcrumb = config.paths.output_dir / f"{config.name}-ablation"
    print(run_ablation(config, args.split), end="")


def register(subparsers) -> None:
    parser = subparsers.add_parser("ablate", help="2x2 augmentation ablation (frequency mask x pitch/formant)")
    add_config_arguments(parser)
    parser.add_argument("--epochs", type=int, help="maximum number of epochs per cell")
    parser.add_argument("--split", choices=("val", "test"), default="test")
    parser.set_defaults(handler=handle)
