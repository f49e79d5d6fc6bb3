"""Argument plumbing shared by the sub-commands."""
import argparse
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from segkit.config import load_run_config
from segkit.dataset import TrainingExample, load_examples
from segkit.errors import InputValidationError
from segkit.records.base import atomic_write_bytes
from segkit.records.feature_cache import FeatureCache
from segkit.records.manifest import manifest_records
from segkit.schemas.corpus import Manifest, ManifestEntry
from segkit.schemas.records import ThresholdChoice
from segkit.schemas.run import RunConfig
from segkit.training import BEST_CHECKPOINT

logger = logging.getLogger(__name__)

THRESHOLD_FILE = "threshold.json"
FEATURE_DIR = "features"


def add_config_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="YAML run config")
    parser.add_argument("--seed", type=int, help="run seed (overrides the config)")
    parser.add_argument("--name", help="run name; the run directory is <output_dir>/<name>")
    parser.add_argument("--cache-dir", type=Path, help="manifest and feature cache directory")
    parser.add_argument("--output-dir", type=Path, help="parent directory of run directories")
    parser.add_argument("--gamma-ms", type=float, help="matching tolerance in milliseconds")


def add_run_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--run", type=Path, help="run directory (default <output_dir>/<name>)")
    parser.add_argument("--checkpoint", type=Path, help="checkpoint file (default <run>/best.ckpt)")


def resolve_config(args: argparse.Namespace, **overrides) -> RunConfig:
    paths = {}
    if getattr(args, "cache_dir", None) is not None:
        paths["cache_dir"] = str(args.cache_dir)
    if getattr(args, "output_dir", None) is not None:
        paths["output_dir"] = str(args.output_dir)
    return load_run_config(
        getattr(args, "config", None),
        seed=getattr(args, "seed", None),
        name=getattr(args, "name", None),
        tolerance_ms=getattr(args, "gamma_ms", None),
        paths=paths or None,
        **overrides,
    )


def run_directory(args: argparse.Namespace, config: RunConfig) -> Path:
    run = getattr(args, "run", None)
    return Path(run) if run is not None else config.run_dir


def checkpoint_path(args: argparse.Namespace, run_dir: Path) -> Path:
    checkpoint = getattr(args, "checkpoint", None)
    return Path(checkpoint) if checkpoint is not None else run_dir / BEST_CHECKPOINT


def feature_cache(config: RunConfig) -> FeatureCache:
    return FeatureCache(config.paths.cache_dir / FEATURE_DIR)


def read_manifest(config: RunConfig) -> Manifest:
    path = manifest_records.path(config.paths.cache_dir)
    if not path.is_file():
        raise InputValidationError(
            f"no manifest at {path}; run `segkit prepare` first",
            path=str(path),
        )
    return manifest_records.read(path)


def split_examples(
    config: RunConfig,
    split: str,
    keep_audio: bool = False,
) -> Tuple[Sequence[ManifestEntry], List[TrainingExample]]:
    entries = read_manifest(config).split(split)
    if not entries:
        raise InputValidationError(f"the {split} split is empty", split=split)
    examples = load_examples(
        entries,
        feature_cache(config),
        config.grid,
        config.model.d_mel,
        include_edges=config.include_edges,
        keep_audio=keep_audio,
    )
    return entries, examples


def write_threshold(run_dir: Path, choice: ThresholdChoice) -> Path:
    path = run_dir / THRESHOLD_FILE
    atomic_write_bytes(path, (choice.model_dump_json(indent=2) + "\n").encode("utf-8"))
    return path


def read_threshold(run_dir: Path) -> ThresholdChoice:
    path = run_dir / THRESHOLD_FILE
    if not path.is_file():
        raise InputValidationError(
            f"no tuned threshold at {path}; run `segkit tune` or pass --nu",
            path=str(path),
        )
    return ThresholdChoice.model_validate_json(path.read_text(encoding="utf-8"))


def resolve_threshold(nu: Optional[float], run_dir: Path) -> float:
    if nu is not None:
        if not 0.0 < nu < 1.0:
            raise InputValidationError("--nu must be in (0, 1)", nu=nu)
        return nu
    return read_threshold(run_dir).threshold
