"""In-memory training examples, feature preparation and batch collation."""
import logging
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
import torch
from pydantic import BaseModel, ConfigDict

from segkit.audio import load_audio
from segkit.boundaries import boundaries_to_labels, intervals_to_boundaries
from segkit.corpus import load_entry_intervals
from segkit.errors import InputValidationError
from segkit.features import align_frames, logmel
from segkit.records.feature_cache import FeatureCache
from segkit.schemas.boundary import BoundarySequence, FrameGrid, FrameLabelSequence
from segkit.schemas.corpus import ManifestEntry
from segkit.schemas.features import D_MEL, MelFrames
from segkit.tracing import get_tracer

logger = logging.getLogger(__name__)
tracer = get_tracer()


@dataclass(frozen=True)
class TrainingExample:
    utterance_id: str
    mel: MelFrames
    boundaries: BoundarySequence
    audio: Optional[np.ndarray] = None

    @property
    def total_frames(self) -> int:
        return self.boundaries.total_frames

    @property
    def labels(self) -> FrameLabelSequence:
        return boundaries_to_labels(self.boundaries)


class CorpusStatistics(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_utterances: int
    n_boundaries: int
    total_seconds: float
    boundaries_per_second: float
    boundary_rate: float


class PrepareResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    computed: int
    cached: int


def entry_features(entry: ManifestEntry, grid: FrameGrid, d_mel: int = D_MEL) -> MelFrames:
    audio = load_audio(entry.audio_path, entry.start_sample, entry.end_sample, grid.sample_rate)
    return logmel(audio, grid.sample_rate, grid, d_mel)


def prepare_features(
    entries: Sequence[ManifestEntry],
    cache: FeatureCache,
    grid: FrameGrid,
    d_mel: int = D_MEL,
) -> PrepareResult:
    """Compute and cache log-mel features for every entry that has no valid cache file."""
    computed = cached = 0
    with tracer.start_as_current_span("prepare-features") as span:
        for entry in entries:
            if cache.has(entry.utterance_id, grid, d_mel):
                cached += 1
                continue
            cache.save(entry.utterance_id, entry_features(entry, grid, d_mel))
            computed += 1
        span.set_attribute("features.computed", computed)
        span.set_attribute("features.cached", cached)
    logger.info("features: %d computed, %d cache hits", computed, cached)
    return PrepareResult(computed=computed, cached=cached)


def load_example(
    entry: ManifestEntry,
    cache: FeatureCache,
    grid: FrameGrid,
    d_mel: int = D_MEL,
    include_edges: bool = False,
    keep_audio: bool = False,
) -> TrainingExample:
    intervals = load_entry_intervals(entry, grid.sample_rate)
    if not intervals:
        raise InputValidationError(f"{entry.annotation_path} has no phone intervals", path=str(entry.annotation_path))
    total_frames = grid.frames_in(intervals[-1].end_sample)
    mel = cache.load(entry.utterance_id) if cache.has(entry.utterance_id, grid, d_mel) else entry_features(entry, grid, d_mel)
    mel = align_frames(mel, total_frames)
    audio = None
    if keep_audio:
        audio = load_audio(entry.audio_path, entry.start_sample, entry.end_sample, grid.sample_rate)
    boundaries = intervals_to_boundaries(intervals, grid, total_frames, include_edges=include_edges)
    return TrainingExample(entry.utterance_id, mel, boundaries, audio)


def load_examples(
    entries: Sequence[ManifestEntry],
    cache: FeatureCache,
    grid: FrameGrid,
    d_mel: int = D_MEL,
    include_edges: bool = False,
    keep_audio: bool = False,
) -> List[TrainingExample]:
    """Examples in manifest order."""
    return [load_example(entry, cache, grid, d_mel, include_edges, keep_audio) for entry in entries]


def corpus_statistics(examples: Sequence[TrainingExample], grid: FrameGrid) -> CorpusStatistics:
    n_boundaries = sum(len(example.boundaries) for example in examples)
    n_frames = sum(example.total_frames for example in examples)
    seconds = n_frames * grid.hop_s
    return CorpusStatistics(
        n_utterances=len(examples),
        n_boundaries=n_boundaries,
        total_seconds=round(seconds, 3),
        boundaries_per_second=n_boundaries / seconds if seconds else 0.0,
        boundary_rate=n_boundaries / n_frames if n_frames else 0.0,
    )


@dataclass(frozen=True)
class Batch:
    mel: torch.Tensor
    labels: torch.Tensor
    mask: torch.Tensor
    lengths: Tuple[int, ...]


def collate(
    mels: Sequence[np.ndarray],
    labels: Sequence[Sequence[int]],
    device: str = "cpu",
    dtype: torch.dtype = torch.float32,
) -> Batch:
    """Pad to the longest utterance; ``mask`` is 1 on real frames, 0 on padding."""
    lengths = tuple(len(values) for values in mels)
    longest = max(lengths)
    d_mel = mels[0].shape[1]
    mel = np.zeros((len(mels), longest, d_mel), dtype=np.float32)
    label_array = np.zeros((len(mels), longest), dtype=np.float32)
    mask = np.zeros((len(mels), longest), dtype=np.float32)
    for row, (values, frame_labels) in enumerate(zip(mels, labels)):
        mel[row, :len(values)] = values
        label_array[row, :len(frame_labels)] = frame_labels
        mask[row, :len(values)] = 1.0
    return Batch(
        mel=torch.from_numpy(mel).to(device=device, dtype=dtype),
        labels=torch.from_numpy(label_array).to(device=device, dtype=dtype),
        mask=torch.from_numpy(mask).to(device=device, dtype=dtype),
        lengths=lengths,
    )


def batched(indices: Sequence[int], batch_size: int) -> Iterator[List[int]]:
    indices = list(indices)
    for start in range(0, len(indices), batch_size):
        yield indices[start:start + batch_size]
