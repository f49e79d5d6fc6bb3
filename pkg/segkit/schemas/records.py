from typing import Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from segkit.schemas.metrics import Aggregation, CorpusScore, PairScore

ModelVariant = Literal["ar", "non-ar"]


class HistoryRecord(BaseModel):
    """One completed training epoch."""
    model_config = ConfigDict(frozen=True)

    format: Literal["segkit.history/1"] = "segkit.history/1"
    epoch: int = Field(ge=1)
    train_loss: float
    validation: Tuple[CorpusScore, ...] = ()
    validation_metric: float
    is_best: bool = False


class UtteranceMetricRecord(BaseModel):
    """Scores of one utterance under every evaluated scheme."""
    model_config = ConfigDict(frozen=True)

    format: Literal["segkit.utterance-metrics/1"] = "segkit.utterance-metrics/1"
    utterance_id: str
    split: str
    threshold: float
    gamma_frames: int = Field(ge=0)
    duplicate_rate: float = Field(ge=0.0, le=1.0)
    scores: Tuple[PairScore, ...]


class CorpusMetricRecord(BaseModel):
    """Corpus-level result of one evaluation run."""
    model_config = ConfigDict(frozen=True)

    format: Literal["segkit.corpus-metrics/1"] = "segkit.corpus-metrics/1"
    run: str
    variant: ModelVariant
    split: str
    seed: int
    threshold: float
    gamma_frames: int = Field(ge=0)
    aggregation: Aggregation
    duplicate_rate: float = Field(ge=0.0, le=1.0)
    r_value_dominance_violations: int = Field(default=0, ge=0)
    include_edges: bool = False
    label: Optional[str] = None
    scores: Tuple[CorpusScore, ...]

    def score(self, scheme: str) -> CorpusScore:
        for score in self.scores:
            if score.scheme == scheme:
                return score
        raise KeyError(scheme)


class ThresholdCurveRecord(BaseModel):
    """Validation metric at one grid threshold."""
    model_config = ConfigDict(frozen=True)

    format: Literal["segkit.threshold-curve/1"] = "segkit.threshold-curve/1"
    threshold: float = Field(gt=0.0, lt=1.0)
    metric: str
    value: float
    selected: bool = False


class ThresholdChoice(BaseModel):
    """Content of ``threshold.json`` written by tuning next to the checkpoints."""
    model_config = ConfigDict(frozen=True)

    format: Literal["segkit.threshold/1"] = "segkit.threshold/1"
    threshold: float = Field(gt=0.0, lt=1.0)
    metric: str
    value: float
    gamma_frames: int = Field(ge=0)
    checkpoint: str
