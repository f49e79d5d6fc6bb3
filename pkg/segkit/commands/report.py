import argparse
import logging
from pathlib import Path
from typing import List, Optional, Sequence

from segkit.commands.common import add_config_arguments, resolve_config
from segkit.config import write_resolved_config
from segkit.errors import InputValidationError
from segkit.records.metrics import corpus_metric_records
from segkit.reporting import format_sweep_table, summarize_runs
from segkit.schemas.run import RunConfig

logger = logging.getLogger(__name__)

REPORT_FILE = "report.txt"


def collect_record_files(inputs: Sequence[Path]) -> List[Path]:
    """Record files given directly, or every ``corpus.jsonl`` below a given directory."""
    files: List[Path] = []
    for path in inputs:
        path = Path(path)
        if path.is_dir():
            files.extend(sorted(path.rglob(corpus_metric_records.filename)))
        else:
            files.append(path)
    if not files:
        raise InputValidationError("no corpus metric records found", inputs=[str(path) for path in inputs])
    return files


def run_report(config: RunConfig, inputs: Sequence[Path], out_dir: Optional[Path] = None) -> str:
    """Mean ± std over runs sharing a label, plus the conventional - proposed R-value gaps."""
    out_dir = Path(out_dir or config.paths.output_dir / f"{config.name}-report")
    write_resolved_config(config, out_dir)
    records = corpus_metric_records.read_many(collect_record_files(inputs))
    text = format_sweep_table(summarize_runs(records))
    (out_dir / REPORT_FILE).write_text(text, encoding="utf-8")
    return text


def handle(args: argparse.Namespace) -> None:
    config = resolve_config(args)
    print(run_report(config, args.inputs, args.out), end="")


def register(subparsers) -> None:
    parser = subparsers.add_parser("report", help="aggregate evaluation records of several runs")
    add_config_arguments(parser)
    parser.add_argument("inputs", type=Path, nargs="+", help="corpus.jsonl files or directories holding them")
    parser.add_argument("--out", type=Path, help="report directory")
    parser.set_defaults(handler=handle)
