from typing import Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from segkit.schemas.features import AugmentConfig

ThresholdMetric = Literal["r_value_proposed", "r_value_conventional"]


class SuperSegConfig(BaseModel):
    """Architecture of the detector; ``autoregressive=False`` drops the boundary embedder."""
    model_config = ConfigDict(frozen=True)

    d_mel: int = Field(default=80, gt=0)
    d_l: int = Field(default=256, gt=0)
    d_h: int = Field(default=192, gt=0)
    d_e: int = Field(default=64, gt=0)
    n_blocks: int = Field(default=6, gt=0)
    kernel: int = Field(default=3, gt=0)
    dilations: Tuple[int, ...] = (1, 2, 4, 1, 2, 4)
    dropout: float = Field(default=0.4, ge=0.0, lt=1.0)
    decoder_hidden: int = Field(default=256, gt=0)
    autoregressive: bool = True

    @field_validator('kernel')
    @classmethod
    def kernel_must_be_odd(cls, v):
        if v % 2 == 0:
            raise ValueError('kernel must be odd so that padding preserves length')
        return v

    @field_validator('dilations')
    @classmethod
    def dilations_must_be_positive(cls, v):
        if any(d <= 0 for d in v):
            raise ValueError('dilations must be positive')
        return v

    @model_validator(mode='after')
    def dimensions_are_consistent(self):
        if len(self.dilations) != self.n_blocks:
            raise ValueError('len(dilations) must equal n_blocks')
        if self.d_l < self.d_h:
            raise ValueError('d_l must be at least d_h')
        return self

    @property
    def receptive_field(self) -> int:
        return 1 + (self.kernel - 1) * sum(self.dilations)


class TrainConfig(BaseModel):
    """Optimisation settings (AdamW) and the validation metric used for model selection."""
    model_config = ConfigDict(frozen=True)

    lr: float = Field(default=0.0005, ge=0.0)
    betas: Tuple[float, float] = (0.9, 0.999)
    weight_decay: float = Field(default=0.01, ge=0.0)
    batch_size: int = Field(default=256, ge=1)
    max_epochs: int = Field(default=1600, ge=1)
    rng_seed: int = 0
    augment: AugmentConfig = AugmentConfig()
    threshold_metric: ThresholdMetric = "r_value_proposed"
    validation_threshold: float = Field(default=0.5, gt=0.0, lt=1.0)
    boundary_rate: Optional[float] = Field(default=None, gt=0.0, lt=1.0)

    @field_validator('lr')
    @classmethod
    def lr_is_finite(cls, v):
        if v != v or v == float("inf"):
            raise ValueError('lr must be finite')
        return v
