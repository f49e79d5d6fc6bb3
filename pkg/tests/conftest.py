import os
import sys
from pathlib import Path

import numpy as np
import pytest
import yaml

# Add the project root directory to Python path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

# Keep test runs on CPU and quiet unless asked otherwise
os.environ.setdefault("SEGKIT_DEVICE", "cpu")
os.environ.setdefault("SEGKIT_LOG_LEVEL", "WARNING")

from segkit.schemas.boundary import FrameGrid
from segkit.schemas.model import SuperSegConfig
from segkit.schemas.run import SyntheticSpec
from segkit.synthetic import generate_corpus


@pytest.fixture
def grid():
    return FrameGrid()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_model_config():
    """Two-block miniature of the detector, small enough for per-test training."""
    return SuperSegConfig(
        d_l=16,
        d_h=8,
        d_e=4,
        n_blocks=2,
        dilations=(1, 2),
        dropout=0.0,
        decoder_hidden=8,
    )


@pytest.fixture(scope="session")
def tiny_spec():
    return SyntheticSpec(n_utterances=20, min_duration_s=0.4, max_duration_s=0.7, seed=7)


@pytest.fixture(scope="session")
def synthetic_corpus(tmp_path_factory, tiny_spec):
    """A generated corpus shared by the whole session: (root, manifest)."""
    root = tmp_path_factory.mktemp("synthetic")
    manifest = generate_corpus(tiny_spec, root)
    return root, manifest


@pytest.fixture
def write_config(tmp_path):
    """Write a YAML run config under tmp_path and return its path."""
    def _write(filename="config.yaml", **data):
        path = Path(tmp_path) / filename
        path.write_text(yaml.safe_dump(data, sort_keys=True), encoding="utf-8")
        return path

    return _write
