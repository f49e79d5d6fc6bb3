from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from segkit.schemas.boundary import FrameGrid

Scheme = Literal["conventional", "proposed"]
Aggregation = Literal["pooled", "macro"]
SCHEMES = ("conventional", "proposed")


class Tolerance(BaseModel):
    """Matching tolerance in whole frames (gamma)."""
    model_config = ConfigDict(frozen=True)

    gamma_frames: int = Field(ge=0)

    @classmethod
    def from_ms(cls, milliseconds: float, grid: FrameGrid) -> "Tolerance":
        if milliseconds < 0:
            raise ValueError('tolerance must be non-negative')
        return cls(gamma_frames=int(round(milliseconds / grid.hop_ms)))


class PairScore(BaseModel):
    """Scores of one utterance under one hit-counting scheme."""
    model_config = ConfigDict(frozen=True)

    scheme: Scheme
    precision: float = Field(ge=0.0, le=1.0)
    recall: float = Field(ge=0.0, le=1.0)
    f1: float = Field(ge=0.0, le=1.0)
    r_value: float = Field(le=1.0)
    n_hit_precision: int = Field(ge=0)
    n_hit_recall: int = Field(ge=0)
    n_ref: int = Field(ge=0)
    n_pred: int = Field(ge=0)


class CorpusScore(PairScore):
    """Corpus-level scores; counts are summed over utterances for both aggregations."""

    aggregation: Aggregation
    n_utterances: int = Field(ge=1)
