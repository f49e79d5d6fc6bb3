import argparse
import logging
from pathlib import Path
from typing import Optional

from segkit.audio import load_audio
from segkit.boundaries import boundaries_to_seconds
from segkit.commands.common import (
    add_config_arguments,
    add_run_arguments,
    checkpoint_path,
    resolve_config,
    resolve_threshold,
    run_directory,
)
from segkit.config import device, write_resolved_config
from segkit.features import logmel
from segkit.models.superseg import infer
from segkit.records.checkpoint import load_checkpoint, restore_model
from segkit.reporting import plot_segmentation
from segkit.schemas.run import RunConfig
from segkit.training import BEST_CHECKPOINT

logger = logging.getLogger(__name__)

SEGMENT_DIR = "segments"
BOUNDARY_SUFFIX = ".boundaries.txt"
PLOT_SUFFIX = ".png"


def run_segment(
    config: RunConfig,
    audio_path: Path,
    run_dir: Optional[Path] = None,
    checkpoint: Optional[Path] = None,
    threshold: Optional[float] = None,
    out_dir: Optional[Path] = None,
    plot: bool = False,
) -> Path:
    """Write the detected boundaries of one file, in seconds, one per line; returns the file."""
    run_dir = Path(run_dir or config.run_dir)
    checkpoint = Path(checkpoint or run_dir / BEST_CHECKPOINT)
    out_dir = Path(out_dir or run_dir / SEGMENT_DIR)
    write_resolved_config(config, out_dir)

    model = restore_model(load_checkpoint(checkpoint), device())
    nu = resolve_threshold(threshold, run_dir)
    audio = load_audio(audio_path, expected_rate=config.grid.sample_rate)
    mel = logmel(audio, config.grid.sample_rate, config.grid, model.config.d_mel)
    boundaries = infer(model, mel, nu)

    stem = Path(audio_path).stem
    boundary_file = out_dir / f"{stem}{BOUNDARY_SUFFIX}"
    seconds = boundaries_to_seconds(boundaries, config.grid)
    boundary_file.write_text("".join(f"{value:.3f}\n" for value in seconds), encoding="utf-8")
    if plot:
        plot_segmentation(mel, boundaries, out_dir / f"{stem}{PLOT_SUFFIX}", title=f"{stem} (threshold {nu:.2f})")
    logger.info("%d boundaries in %s", len(seconds), audio_path)
    return boundary_file


def handle(args: argparse.Namespace) -> None:
    config = resolve_config(args)
    run_dir = run_directory(args, config)
    args.breadcrumb = run_dir
    path = run_segment(config, args.audio, run_dir, checkpoint_path(args, run_dir), args.nu, args.out, args.plot)
    print(path)


def register(subparsers) -> None:
    parser = subparsers.add_parser("segment", help="detect boundaries in one 16 kHz audio file")
    add_config_arguments(parser)
    add_run_arguments(parser)
    parser.add_argument("audio", type=Path, help="16 kHz mono WAV or SPHERE file")
    parser.add_argument("--nu", type=float, help="decision threshold (default: threshold.json)")
    parser.add_argument("--out", type=Path, help="output directory (default <run>/segments)")
    parser.add_argument("--plot", action="store_true", help="also write a mel-spectrogram plot")
    parser.set_defaults(handler=handle)
