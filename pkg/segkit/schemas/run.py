import math
from pathlib import Path
from typing import Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from segkit.schemas.boundary import FrameGrid
from segkit.schemas.metrics import SCHEMES, Aggregation, Scheme, Tolerance
from segkit.schemas.model import SuperSegConfig, TrainConfig

CorpusName = Literal["timit", "buckeye", "synthetic"]


class SyntheticSpec(BaseModel):
    """
    Generated corpus of piecewise-stationary sounds.

    Segment durations are log-normal (median ``median_segment_s``, log-sd ``sigma``); each
    segment renders one template of a seeded bank: band-limited noise under a random
    envelope, with a harmonic stack added to some templates.
    """
    model_config = ConfigDict(frozen=True)

    n_utterances: int = Field(default=300, ge=1)
    min_duration_s: float = Field(default=1.5, gt=0.0)
    max_duration_s: float = Field(default=3.0, gt=0.0)
    median_segment_s: float = Field(default=0.080, gt=0.0)
    sigma: float = Field(default=0.5, ge=0.0)
    min_segment_s: float = Field(default=0.020, gt=0.0)
    n_templates: int = Field(default=24, ge=2)
    harmonic_probability: float = Field(default=0.5, ge=0.0, le=1.0)
    sample_rate: int = 16000
    peak: float = Field(default=0.9, gt=0.0, le=1.0)
    seed: int = 0

    @model_validator(mode='after')
    def duration_range_is_ordered(self):
        if self.max_duration_s < self.min_duration_s:
            raise ValueError('max_duration_s must be at least min_duration_s')
        return self

    @property
    def mean_segment_s(self) -> float:
        return self.median_segment_s * math.exp(self.sigma ** 2 / 2.0)


class PathsConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    corpus_root: Optional[Path] = None
    cache_dir: Path = Path("cache")
    output_dir: Path = Path("runs")


class RunConfig(BaseModel):
    """
    Everything one run needs; written as ``config.yaml`` before any other output.

    ``seed`` is the only seed a run config carries: ``train.rng_seed`` is filled from it,
    and a YAML value that disagrees is rejected.
    """
    model_config = ConfigDict(frozen=True)

    name: str = Field(default="superseg", min_length=1)
    corpus: CorpusName = "synthetic"
    paths: PathsConfig = PathsConfig()
    split_ratios: Tuple[int, int, int] = (8, 1, 1)
    val_fraction: float = Field(default=0.1, ge=0.0, lt=1.0)
    grid: FrameGrid = FrameGrid()
    model: SuperSegConfig = SuperSegConfig()
    train: TrainConfig = TrainConfig()
    tolerance_ms: float = Field(default=20.0, ge=0.0)
    schemes: Tuple[Scheme, ...] = SCHEMES
    aggregation: Aggregation = "pooled"
    include_edges: bool = False
    threshold_grid: Optional[Tuple[float, ...]] = None
    seed: int = 0
    synthetic: SyntheticSpec = SyntheticSpec()

    @model_validator(mode='before')
    @classmethod
    def train_seed_follows_run_seed(cls, data):
        if not isinstance(data, dict):
            return data
        seed = data.get('seed', 0)
        train = data.get('train') or {}
        if isinstance(train, TrainConfig):
            explicit = train.rng_seed if 'rng_seed' in train.model_fields_set else seed
            train = train.model_dump()
        else:
            train = dict(train)
            explicit = train.get('rng_seed', seed)
        if int(explicit) != int(seed):
            raise ValueError('train.rng_seed disagrees with the run seed; set only `seed`')
        train['rng_seed'] = seed
        return {**data, 'train': train}

    @field_validator('split_ratios')
    @classmethod
    def ratios_are_positive(cls, v):
        if any(part <= 0 for part in v):
            raise ValueError('split ratios must be positive')
        return v

    @field_validator('schemes')
    @classmethod
    def schemes_not_empty(cls, v):
        if not v:
            raise ValueError('at least one scheme is required')
        return tuple(dict.fromkeys(v))

    @field_validator('threshold_grid')
    @classmethod
    def grid_inside_unit_interval(cls, v):
        if v is not None and (not v or any(not 0.0 < value < 1.0 for value in v)):
            raise ValueError('threshold grid values must lie in (0, 1)')
        return v

    @property
    def tolerance(self) -> Tolerance:
        return Tolerance.from_ms(self.tolerance_ms, self.grid)

    @property
    def run_dir(self) -> Path:
        return self.paths.output_dir / self.name
