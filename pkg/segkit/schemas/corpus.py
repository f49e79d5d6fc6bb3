from pathlib import Path
from typing import Dict, Literal, Optional, Set, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Split = Literal["train", "val", "test"]
AnnotationFormat = Literal["timit", "buckeye"]
SPLITS: Tuple[str, ...] = ("train", "val", "test")


class ManifestEntry(BaseModel):
    """
    One utterance of a corpus.

    Buckeye recordings are cut into chunks, so an entry may cover only
    ``[start_sample, end_sample)`` of its audio file; ``end_sample`` is None when the
    whole file is used.
    """
    model_config = ConfigDict(frozen=True)

    utterance_id: str = Field(min_length=1)
    audio_path: Path
    annotation_path: Path
    speaker_id: str = Field(min_length=1)
    split: Split
    annotation_format: AnnotationFormat = "timit"
    start_sample: int = Field(default=0, ge=0)
    end_sample: Optional[int] = None

    @field_validator('utterance_id', 'speaker_id')
    @classmethod
    def no_tabs_or_newlines(cls, v):
        if any(ch in v for ch in "\t\r\n"):
            raise ValueError('identifiers must not contain tabs or newlines')
        return v

    @model_validator(mode='after')
    def segment_is_ordered(self):
        if self.end_sample is not None and self.end_sample <= self.start_sample:
            raise ValueError('end_sample must be after start_sample')
        return self


class Manifest(BaseModel):
    """All utterances of a prepared corpus with their split assignment."""
    model_config = ConfigDict(frozen=True)

    entries: Tuple[ManifestEntry, ...] = ()
    seed: int = 0

    @model_validator(mode='after')
    def utterance_ids_unique(self):
        seen: Set[str] = set()
        for entry in self.entries:
            if entry.utterance_id in seen:
                raise ValueError(f'duplicate utterance_id {entry.utterance_id!r}')
            seen.add(entry.utterance_id)
        return self

    def split(self, name: str) -> Tuple[ManifestEntry, ...]:
        return tuple(entry for entry in self.entries if entry.split == name)

    def split_sizes(self) -> Dict[str, int]:
        return {name: len(self.split(name)) for name in SPLITS}

    def speakers_by_split(self) -> Dict[str, Set[str]]:
        return {name: {entry.speaker_id for entry in self.split(name)} for name in SPLITS}

    def speakers_are_disjoint(self) -> bool:
        speakers = self.speakers_by_split()
        return (
            not speakers["train"] & speakers["val"]
            and not speakers["train"] & speakers["test"]
            and not speakers["val"] & speakers["test"]
        )

    def missing_files(self) -> Tuple[Path, ...]:
        missing = []
        for entry in self.entries:
            for path in (entry.audio_path, entry.annotation_path):
                if not Path(path).is_file() and path not in missing:
                    missing.append(path)
        return tuple(missing)
