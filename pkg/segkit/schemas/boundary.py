from typing import NamedTuple, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class PhoneInterval(NamedTuple):
    """One annotated phone segment in samples, end exclusive."""
    start_sample: int
    end_sample: int
    phone_label: str


class FrameGrid(BaseModel):
    """Analysis grid shared by features, labels and tolerances."""
    model_config = ConfigDict(frozen=True)

    hop_s: float = 0.010
    window_s: float = 0.040
    sample_rate: int = 16000

    @field_validator('hop_s', 'window_s')
    @classmethod
    def must_be_positive(cls, v):
        if not v > 0:
            raise ValueError('hop_s and window_s must be positive')
        return v

    @field_validator('sample_rate')
    @classmethod
    def sample_rate_must_be_positive(cls, v):
        if v <= 0:
            raise ValueError('sample_rate must be a positive integer')
        return v

    @model_validator(mode='after')
    def window_covers_hop_and_hop_is_whole(self):
        if self.window_s < self.hop_s:
            raise ValueError('window_s must be at least hop_s')
        hop = self.hop_s * self.sample_rate
        if abs(hop - round(hop)) > 1e-6 or round(hop) < 1:
            raise ValueError('hop_s * sample_rate must be a whole number of samples')
        return self

    @property
    def hop_samples(self) -> int:
        return int(round(self.hop_s * self.sample_rate))

    @property
    def window_samples(self) -> int:
        return int(round(self.window_s * self.sample_rate))

    @property
    def hop_ms(self) -> float:
        return self.hop_s * 1000.0

    def frame_of_sample(self, sample: int) -> int:
        return int(sample) // self.hop_samples

    def frames_in(self, num_samples: int) -> int:
        return int(num_samples) // self.hop_samples


class BoundarySequence(BaseModel):
    """Strictly increasing boundary frame indices of one utterance with T frames."""
    model_config = ConfigDict(frozen=True)

    frames: Tuple[int, ...] = ()
    total_frames: int = Field(gt=0)

    @model_validator(mode='after')
    def strictly_increasing_within_utterance(self):
        previous = -1
        for frame in self.frames:
            if frame <= previous:
                raise ValueError(f'boundary frames must be strictly increasing and non-negative (got {frame} after {previous})')
            previous = frame
        if self.frames and self.frames[-1] >= self.total_frames:
            raise ValueError(f'boundary frame {self.frames[-1]} outside utterance of {self.total_frames} frames')
        return self

    def __len__(self) -> int:
        return len(self.frames)


class FrameLabelSequence(BaseModel):
    """Per-frame binary boundary labels (1 where the frame holds a boundary)."""
    model_config = ConfigDict(frozen=True)

    labels: Tuple[int, ...] = Field(min_length=1)

    @field_validator('labels')
    @classmethod
    def labels_must_be_binary(cls, v):
        if any(label not in (0, 1) for label in v):
            raise ValueError('labels must be 0 or 1')
        return v

    @property
    def total_frames(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return len(self.labels)
