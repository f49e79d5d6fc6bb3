"""
Training-time augmentation: frequency-channel masking on features and
pitch/formant perturbation on waveforms.

The perturbation follows the usual recipe: pitch is moved by a phase-vocoder time
stretch followed by resampling, and formants by warping the frequency axis of a
cepstrally smoothed spectral envelope while keeping the excitation. Any callable with
the `Perturber` signature can replace it.
"""
import functools
import logging
from typing import Optional, Protocol, Tuple

import librosa
import numpy as np

from segkit.errors import InputValidationError
from segkit.schemas.features import AugmentConfig, MelFrames

logger = logging.getLogger(__name__)

VOCODER_N_FFT = 1024
VOCODER_HOP = 256
ENVELOPE_QUEFRENCY_S = 1.0 / 400.0
DEFAULT_PITCH_RANGE = (1 / 1.2, 1.2)
DEFAULT_FORMANT_RANGE = (1 / 1.1, 1.1)


class Perturber(Protocol):
    def __call__(
        self,
        audio: np.ndarray,
        sample_rate: int,
        pitch_mult: float,
        formant_mult: float,
    ) -> np.ndarray: ...


def freq_mask(mel: MelFrames, rng: np.random.Generator, max_width: int = 35) -> MelFrames:
    """Replace one block of w ~ U{0..max_width-1} channels with the utterance mean."""
    if max_width > mel.d_mel:
        raise InputValidationError("mask wider than the spectrum", max_width=max_width, d_mel=mel.d_mel)
    if max_width <= 0:
        return mel

    width = int(rng.integers(0, max_width))
    start = int(rng.integers(0, mel.d_mel - width + 1))
    if width == 0:
        return mel

    values = np.array(mel.values, copy=True)
    values[:, start:start + width] = mel.values.mean()
    return MelFrames(values=values, grid=mel.grid)


def _check_multiplier(name: str, value: float, bounds: Tuple[float, float]) -> None:
    low, high = bounds
    if not (low - 1e-9 <= value <= high + 1e-9):
        raise InputValidationError(f"{name} {value} outside [{low:.4f}, {high:.4f}]", **{name: value})


def shift_pitch(audio: np.ndarray, sample_rate: int, pitch_mult: float) -> np.ndarray:
    """Stretch by ``pitch_mult`` in time, then resample back to the original duration."""
    stretched = librosa.effects.time_stretch(
        audio, rate=1.0 / pitch_mult, n_fft=VOCODER_N_FFT, hop_length=VOCODER_HOP
    )
    shifted = librosa.resample(stretched, orig_sr=sample_rate * pitch_mult, target_sr=sample_rate)
    return librosa.util.fix_length(shifted, size=len(audio))


def _warp_bins(envelope: np.ndarray, factor: float) -> np.ndarray:
    bins = envelope.shape[0]
    source = np.clip(np.arange(bins) / factor, 0, bins - 1)
    lower = np.floor(source).astype(int)
    upper = np.minimum(lower + 1, bins - 1)
    weight = (source - lower)[:, None]
    return envelope[lower] * (1.0 - weight) + envelope[upper] * weight


def shift_formants(
    audio: np.ndarray,
    sample_rate: int,
    formant_mult: float,
    quefrency_cutoff_s: float = ENVELOPE_QUEFRENCY_S,
) -> np.ndarray:
    """Move the spectral envelope by ``formant_mult`` and keep the fine structure."""
    spectrum = librosa.stft(audio, n_fft=VOCODER_N_FFT, hop_length=VOCODER_HOP, window="hann")
    log_magnitude = np.log(np.abs(spectrum) + 1e-8)

    cepstrum = np.fft.irfft(log_magnitude, n=VOCODER_N_FFT, axis=0)
    cutoff = max(1, int(sample_rate * quefrency_cutoff_s))
    lifter = np.zeros(VOCODER_N_FFT)
    lifter[:cutoff] = 1.0
    lifter[VOCODER_N_FFT - cutoff + 1:] = 1.0
    envelope = np.fft.rfft(cepstrum * lifter[:, None], axis=0).real

    excitation = log_magnitude - envelope
    magnitude = np.exp(excitation + _warp_bins(envelope, formant_mult))
    return librosa.istft(
        magnitude * np.exp(1j * np.angle(spectrum)),
        hop_length=VOCODER_HOP,
        window="hann",
        length=len(audio),
    )


def pitch_formant_perturb(
    audio: np.ndarray,
    sample_rate: int,
    pitch_mult: float,
    formant_mult: float,
    pitch_range: Tuple[float, float] = DEFAULT_PITCH_RANGE,
    formant_range: Tuple[float, float] = DEFAULT_FORMANT_RANGE,
) -> np.ndarray:
    _check_multiplier("pitch_mult", pitch_mult, pitch_range)
    _check_multiplier("formant_mult", formant_mult, formant_range)

    signal = np.asarray(audio, dtype=np.float64)
    if pitch_mult != 1.0:
        signal = shift_pitch(signal, sample_rate, pitch_mult)
    if formant_mult != 1.0:
        signal = shift_formants(signal, sample_rate, formant_mult)
    return signal.astype(np.float32)


class Augmenter:
    """Applies an `AugmentConfig` to one example with a caller-supplied generator."""

    def __init__(self, config: AugmentConfig, perturber: Optional[Perturber] = None):
        self.config = config
        self.perturber = perturber or functools.partial(
            pitch_formant_perturb,
            pitch_range=config.pitch_range,
            formant_range=config.formant_range,
        )

    @property
    def touches_audio(self) -> bool:
        return self.config.pitch_formant_enabled

    def draw_multipliers(self, rng: np.random.Generator) -> Tuple[float, float]:
        # log-uniform so that m and 1/m are equally likely
        pitch = float(np.exp(rng.uniform(*np.log(self.config.pitch_range))))
        formant = float(np.exp(rng.uniform(*np.log(self.config.formant_range))))
        return pitch, formant

    def augment_audio(self, audio: np.ndarray, sample_rate: int, rng: np.random.Generator) -> np.ndarray:
        if not self.config.pitch_formant_enabled:
            return audio
        pitch, formant = self.draw_multipliers(rng)
        return self.perturber(audio, sample_rate, pitch, formant)

    def augment_features(self, mel: MelFrames, rng: np.random.Generator) -> MelFrames:
        if not self.config.freq_mask_enabled:
            return mel
        return freq_mask(mel, rng, self.config.freq_mask_max)
