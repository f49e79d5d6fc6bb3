from dataclasses import dataclass
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from segkit.errors import NumericalError
from segkit.schemas.boundary import FrameGrid

D_MEL = 80


@dataclass(frozen=True)
class MelFrames:
    """T x d_mel log-mel matrix on a frame grid."""

    values: np.ndarray
    grid: FrameGrid

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float32)
        if values.ndim != 2 or values.shape[1] < 1:
            raise ValueError(f"mel values must be a T x d_mel matrix, got shape {values.shape}")
        if not np.isfinite(values).all():
            raise NumericalError("mel values contain non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def total_frames(self) -> int:
        return int(self.values.shape[0])

    @property
    def d_mel(self) -> int:
        return int(self.values.shape[1])


class AugmentConfig(BaseModel):
    """Training-time augmentation settings; fresh draws every epoch."""
    model_config = ConfigDict(frozen=True)

    freq_mask_enabled: bool = True
    freq_mask_max: int = 35
    pitch_formant_enabled: bool = True
    pitch_range: Tuple[float, float] = (1 / 1.2, 1.2)
    formant_range: Tuple[float, float] = (1 / 1.1, 1.1)

    @field_validator('freq_mask_max')
    @classmethod
    def mask_narrower_than_spectrum(cls, v):
        if not 0 <= v < D_MEL:
            raise ValueError(f'freq_mask_max must be in [0, {D_MEL})')
        return v

    @field_validator('pitch_range', 'formant_range')
    @classmethod
    def range_contains_identity(cls, v):
        low, high = v
        if not 0 < low <= 1.0 <= high:
            raise ValueError('multiplier ranges must be positive and contain 1.0')
        return v
