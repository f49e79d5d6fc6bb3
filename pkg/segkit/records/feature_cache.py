"""
Binary log-mel cache, one file per utterance.

Layout (little endian): magic ``SGKF``, u16 version, u32 T, u16 d_mel, f64 hop_s,
f64 window_s, then T x d_mel float32 values row-major.
"""
import struct
from pathlib import Path
from typing import Optional

import numpy as np

from segkit.errors import RecordFormatError
from segkit.features import FEATURE_SAMPLE_RATE
from segkit.records.base import PathLike, atomic_write_bytes
from segkit.schemas.boundary import FrameGrid
from segkit.schemas.features import MelFrames

FEATURE_MAGIC = b"SGKF"
FEATURE_VERSION = 1
FEATURE_HEADER = struct.Struct("<4sHIHdd")
FEATURE_SUFFIX = ".sgkf"


def encode_features(mel: MelFrames) -> bytes:
    header = FEATURE_HEADER.pack(
        FEATURE_MAGIC,
        FEATURE_VERSION,
        mel.total_frames,
        mel.d_mel,
        mel.grid.hop_s,
        mel.grid.window_s,
    )
    return header + mel.values.astype("<f4").tobytes(order="C")


def decode_features(payload: bytes, path: PathLike = "<bytes>") -> MelFrames:
    if len(payload) < FEATURE_HEADER.size:
        raise RecordFormatError(f"{path}: truncated feature header", path=str(path))
    magic, version, frames, d_mel, hop_s, window_s = FEATURE_HEADER.unpack_from(payload)
    if magic != FEATURE_MAGIC:
        raise RecordFormatError(f"{path}: not a segkit feature file", path=str(path))
    if version != FEATURE_VERSION:
        raise RecordFormatError(f"{path}: unsupported feature version {version}", path=str(path))
    expected = FEATURE_HEADER.size + frames * d_mel * 4
    if len(payload) != expected:
        raise RecordFormatError(
            f"{path}: expected {expected} bytes, found {len(payload)}",
            path=str(path),
        )
    values = np.frombuffer(payload, dtype="<f4", offset=FEATURE_HEADER.size).reshape(frames, d_mel)
    grid = FrameGrid(hop_s=hop_s, window_s=window_s, sample_rate=FEATURE_SAMPLE_RATE)
    return MelFrames(values=values.astype(np.float32), grid=grid)


class FeatureCache:
    def __init__(self, directory: PathLike):
        self.directory = Path(directory)

    def path_for(self, utterance_id: str) -> Path:
        return self.directory / f"{utterance_id}{FEATURE_SUFFIX}"

    def _header(self, utterance_id: str) -> Optional[tuple]:
        path = self.path_for(utterance_id)
        if not path.is_file():
            return None
        with path.open("rb") as handle:
            raw = handle.read(FEATURE_HEADER.size)
        if len(raw) < FEATURE_HEADER.size:
            return None
        return FEATURE_HEADER.unpack(raw)

    def has(self, utterance_id: str, grid: FrameGrid, d_mel: int) -> bool:
        """True when a cached file exists and was computed on the same grid and filterbank size."""
        header = self._header(utterance_id)
        if header is None:
            return False
        magic, version, _, cached_d_mel, hop_s, window_s = header
        return (
            magic == FEATURE_MAGIC
            and version == FEATURE_VERSION
            and cached_d_mel == d_mel
            and hop_s == grid.hop_s
            and window_s == grid.window_s
        )

    def save(self, utterance_id: str, mel: MelFrames) -> Path:
        path = self.path_for(utterance_id)
        atomic_write_bytes(path, encode_features(mel))
        return path

    def load(self, utterance_id: str) -> MelFrames:
        path = self.path_for(utterance_id)
        if not path.is_file():
            raise RecordFormatError(f"no cached features for {utterance_id} at {path}", path=str(path))
        return decode_features(path.read_bytes(), path)
