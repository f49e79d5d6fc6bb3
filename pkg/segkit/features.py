"""Log-mel feature extraction on the 40 ms / 10 ms grid."""
import functools
import logging
from typing import Sequence

import librosa
import numpy as np

from segkit.errors import InputValidationError
from segkit.schemas.boundary import FrameGrid
from segkit.schemas.features import D_MEL, MelFrames

logger = logging.getLogger(__name__)

N_FFT = 1024
LOG_FLOOR = 1e-5
FEATURE_SAMPLE_RATE = 16000
MAX_FRAME_MISMATCH = 2


@functools.lru_cache(maxsize=8)
def mel_filterbank(sample_rate: int, n_fft: int, d_mel: int) -> np.ndarray:
    """Triangular HTK-scale filters spanning 0 Hz to Nyquist, unit peak (d_mel x bins)."""
    basis = librosa.filters.mel(
        sr=sample_rate,
        n_fft=n_fft,
        n_mels=d_mel,
        fmin=0.0,
        fmax=sample_rate / 2.0,
        htk=True,
        norm=None,
    )
    basis.setflags(write=False)
    return basis


def mel_center_frequencies(sample_rate: int = FEATURE_SAMPLE_RATE, d_mel: int = D_MEL) -> np.ndarray:
    return librosa.mel_frequencies(n_mels=d_mel + 2, fmin=0.0, fmax=sample_rate / 2.0, htk=True)[1:-1]


def logmel(
    audio: Sequence[float],
    sample_rate: int,
    grid: FrameGrid = FrameGrid(),
    d_mel: int = D_MEL,
) -> MelFrames:
    """
    Power-spectrum log-mel features, log(mel + 1e-5).

    STFT: periodic Hann window of ``grid.window_s``, hop ``grid.hop_s``, FFT size 1024,
    centred with reflect padding. T is truncated to floor(num_samples / hop).
    """
    signal = np.asarray(audio, dtype=np.float64)
    if signal.ndim != 1 or signal.size == 0:
        raise InputValidationError("audio must be a non-empty mono signal", shape=signal.shape)
    if not np.isfinite(signal).all():
        raise InputValidationError("audio contains non-finite samples")
    if sample_rate != FEATURE_SAMPLE_RATE or grid.sample_rate != sample_rate:
        raise InputValidationError(
            f"features are computed at {FEATURE_SAMPLE_RATE} Hz, got {sample_rate} Hz (grid {grid.sample_rate} Hz)",
            sample_rate=sample_rate,
        )
    total_frames = grid.frames_in(signal.size)
    if total_frames < 1:
        raise InputValidationError(
            f"audio of {signal.size} samples is shorter than one hop ({grid.hop_samples})",
            num_samples=signal.size,
        )

    n_fft = max(N_FFT, grid.window_samples)
    spectrum = librosa.stft(
        signal,
        n_fft=n_fft,
        hop_length=grid.hop_samples,
        win_length=grid.window_samples,
        window="hann",
        center=True,
        pad_mode="reflect",
    )
    power = np.abs(spectrum) ** 2
    mel = mel_filterbank(sample_rate, n_fft, d_mel) @ power
    values = np.log(mel + LOG_FLOOR).T[:total_frames]
    return MelFrames(values=values.astype(np.float32), grid=grid)


def align_frames(mel: MelFrames, total_frames: int, max_mismatch: int = MAX_FRAME_MISMATCH) -> MelFrames:
    """Truncate or edge-pad features to the annotation-derived frame count."""
    difference = mel.total_frames - total_frames
    if abs(difference) > max_mismatch:
        raise InputValidationError(
            f"features have {mel.total_frames} frames but annotations imply {total_frames}",
            feature_frames=mel.total_frames,
            label_frames=total_frames,
        )
    if difference == 0:
        return mel
    if difference > 0:
        values = mel.values[:total_frames]
    else:
        values = np.concatenate([mel.values, np.repeat(mel.values[-1:], -difference, axis=0)], axis=0)
    return MelFrames(values=values, grid=mel.grid)
