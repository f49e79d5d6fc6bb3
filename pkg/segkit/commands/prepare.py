import argparse
import logging
from pathlib import Path
from typing import Dict, Optional

from pydantic import BaseModel, ConfigDict

from segkit.commands.common import add_config_arguments, feature_cache, resolve_config
from segkit.config import write_resolved_config
from segkit.corpus import build_buckeye_manifest, build_synthetic_manifest, build_timit_manifest
from segkit.dataset import CorpusStatistics, PrepareResult, corpus_statistics, load_examples, prepare_features
from segkit.errors import CorpusLayoutError, InputValidationError
from segkit.records.manifest import manifest_records
from segkit.schemas.corpus import SPLITS, Manifest
from segkit.schemas.run import RunConfig
from segkit.tracing import get_tracer

logger = logging.getLogger(__name__)
tracer = get_tracer()


def build_manifest(config: RunConfig, corpus: str, root: Path) -> Manifest:
    if corpus == "timit":
        return build_timit_manifest(root, config.val_fraction, config.seed)
    if corpus == "buckeye":
        manifest = build_buckeye_manifest(root, config.split_ratios, config.seed, config.grid.sample_rate)
        if not manifest.speakers_are_disjoint():
            raise CorpusLayoutError("Buckeye splits share speakers", path=str(root))
        return manifest
    return build_synthetic_manifest(root, config.split_ratios, config.seed)


class PrepareSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    features: PrepareResult
    statistics: Dict[str, CorpusStatistics]


def run_prepare(config: RunConfig, corpus: Optional[str] = None, root: Optional[Path] = None) -> PrepareSummary:
    """
    Build the manifest, cache log-mel features and return per-split statistics.

    Writes ``manifest.tsv`` and ``features/`` into the cache directory; features already
    cached on the same grid are left untouched.
    """
    corpus = corpus or config.corpus
    root = root or config.paths.corpus_root
    if root is None:
        raise InputValidationError("no corpus root given (--root or paths.corpus_root)")
    root = Path(root)
    cache_dir = config.paths.cache_dir
    if not root.is_dir():
        raise CorpusLayoutError(f"corpus root {root} does not exist", path=str(root))
    write_resolved_config(config, cache_dir)

    with tracer.start_as_current_span("prepare-corpus") as span:
        span.set_attribute("corpus.name", corpus)
        manifest = build_manifest(config, corpus, root)
        missing = manifest.missing_files()
        if missing:
            raise CorpusLayoutError(
                f"{len(missing)} file(s) listed in the manifest are missing: "
                + ", ".join(str(path) for path in missing[:10]),
                missing=[str(path) for path in missing],
            )
        manifest_records.write(manifest_records.path(cache_dir), manifest)
        cache = feature_cache(config)
        features = prepare_features(manifest.entries, cache, config.grid, config.model.d_mel)

        statistics = {}
        for split in SPLITS:
            entries = manifest.split(split)
            if entries:
                examples = load_examples(entries, cache, config.grid, config.model.d_mel, config.include_edges)
                statistics[split] = corpus_statistics(examples, config.grid)
        span.set_attribute("manifest.sizes", manifest.split_sizes())
    return PrepareSummary(features=features, statistics=statistics)


def format_statistics(summary: PrepareSummary) -> str:
    lines = [f"{'split':<7}{'utterances':>11}{'boundaries':>12}{'seconds':>10}{'bnd/s':>8}"]
    for split, stats in summary.statistics.items():
        lines.append(
            f"{split:<7}{stats.n_utterances:>11}{stats.n_boundaries:>12}"
            f"{stats.total_seconds:>10.1f}{stats.boundaries_per_second:>8.2f}"
        )
    lines.append(f"features: {summary.features.computed} computed, {summary.features.cached} cached")
    return "\n".join(lines)


def handle(args: argparse.Namespace) -> None:
    config = resolve_config(args, corpus=args.corpus)
    args.breadcrumb = config.paths.cache_dir
    print(format_statistics(run_prepare(config, args.corpus, args.root)))


def register(subparsers) -> None:
    parser = subparsers.add_parser("prepare", help="build the manifest and cache log-mel features")
    add_config_arguments(parser)
    parser.add_argument("--corpus", choices=("timit", "buckeye", "synthetic"))
    parser.add_argument("--root", type=Path, help="corpus root (default paths.corpus_root)")
    parser.set_defaults(handler=handle)
