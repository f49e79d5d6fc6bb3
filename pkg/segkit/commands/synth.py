import argparse
import logging
from pathlib import Path
from typing import Optional

from segkit.commands.common import add_config_arguments, resolve_config
from segkit.config import write_resolved_config
from segkit.records.manifest import manifest_records
from segkit.schemas.corpus import Manifest
from segkit.schemas.run import RunConfig
from segkit.synthetic import generate_corpus

logger = logging.getLogger(__name__)

DEFAULT_SYNTHETIC_ROOT = Path("data/synthetic")


def run_synth(config: RunConfig, out_dir: Optional[Path] = None) -> Manifest:
    """Generate the configured synthetic corpus into ``out_dir`` and write its manifest there."""
    out_dir = Path(out_dir or config.paths.corpus_root or DEFAULT_SYNTHETIC_ROOT)
    write_resolved_config(config, out_dir)
    manifest = generate_corpus(config.synthetic, out_dir, config.split_ratios)
    manifest_records.write(manifest_records.path(out_dir), manifest)
    return manifest


def handle(args: argparse.Namespace) -> None:
    synthetic = {}
    if args.n_utterances is not None:
        synthetic["n_utterances"] = args.n_utterances
    if args.seed is not None:
        synthetic["seed"] = args.seed
    config = resolve_config(args, synthetic=synthetic or None)
    args.breadcrumb = args.out
    manifest = run_synth(config, args.out)
    sizes = manifest.split_sizes()
    print(f"synthesized {len(manifest.entries)} utterances "
          f"(train {sizes['train']}, val {sizes['val']}, test {sizes['test']})")


def register(subparsers) -> None:
    parser = subparsers.add_parser("synth", help="generate a synthetic corpus with exact boundaries")
    add_config_arguments(parser)
    parser.add_argument("--out", type=Path, help="corpus directory (default paths.corpus_root)")
    parser.add_argument("--n", type=int, dest="n_utterances", help="number of utterances")
    parser.set_defaults(handler=handle)
