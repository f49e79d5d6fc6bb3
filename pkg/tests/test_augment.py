import numpy as np
import pytest

from segkit.augment import Augmenter, freq_mask, pitch_formant_perturb, shift_formants, shift_pitch
from segkit.errors import InputValidationError
from segkit.schemas.features import AugmentConfig, MelFrames


def ramp_mel(grid, frames=50, d_mel=80):
    values = np.tile(np.arange(d_mel, dtype=np.float32), (frames, 1)) + np.arange(frames)[:, None]
    return MelFrames(values=values, grid=grid)


def masked_channels(original, masked):
    changed = np.any(original.values != masked.values, axis=0)
    return np.flatnonzero(changed)


def dominant_frequency(audio, sample_rate=16000):
    spectrum = np.abs(np.fft.rfft(audio * np.hanning(len(audio))))
    return np.fft.rfftfreq(len(audio), 1.0 / sample_rate)[np.argmax(spectrum)]


def sine(frequency, seconds=1.0, sample_rate=16000):
    t = np.arange(int(seconds * sample_rate)) / sample_rate
    return (0.5 * np.sin(2 * np.pi * frequency * t)).astype(np.float32)


def test_freq_mask_fills_one_contiguous_block_with_the_mean(grid):
    mel = ramp_mel(grid)
    for seed in range(50):
        masked = freq_mask(mel, np.random.default_rng(seed))
        channels = masked_channels(mel, masked)
        assert len(channels) < 35
        if len(channels):
            assert np.all(np.diff(channels) == 1)
            block = masked.values[:, channels]
            assert np.allclose(block, mel.values.mean())
        keep = np.setdiff1d(np.arange(80), channels)
        assert np.array_equal(masked.values[:, keep], mel.values[:, keep])


def test_freq_mask_width_is_uniform_over_zero_to_thirty_four(grid):
    mel = ramp_mel(grid, frames=4)
    widths = []
    for seed in range(2000):
        rng = np.random.default_rng(seed)
        width = int(rng.integers(0, 35))
        widths.append(width)
        rng = np.random.default_rng(seed)
        masked = freq_mask(mel, rng)
        assert len(masked_channels(mel, masked)) == width
    assert min(widths) == 0 and max(widths) == 34
    assert abs(np.mean(widths) - 17.0) < 0.8


def test_freq_mask_is_reproducible(grid):
    mel = ramp_mel(grid)
    first = freq_mask(mel, np.random.default_rng(5))
    second = freq_mask(mel, np.random.default_rng(5))
    assert np.array_equal(first.values, second.values)


def test_freq_mask_disabled_and_oversized(grid, rng):
    mel = ramp_mel(grid, d_mel=20)
    assert freq_mask(mel, rng, max_width=0) is mel
    with pytest.raises(InputValidationError):
        freq_mask(mel, rng, max_width=21)


def test_identity_multipliers_leave_audio_alone():
    audio = sine(300.0, seconds=0.5)
    out = pitch_formant_perturb(audio, 16000, 1.0, 1.0)
    assert out.dtype == np.float32
    assert np.array_equal(out, audio)


@pytest.mark.parametrize("pitch, formant", [(1.3, 1.0), (1.0, 0.85), (0.5, 1.0)])
def test_multipliers_outside_range_are_rejected(pitch, formant):
    with pytest.raises(InputValidationError):
        pitch_formant_perturb(sine(300.0, seconds=0.2), 16000, pitch, formant)


def test_pitch_shift_moves_a_tone_and_keeps_length():
    audio = sine(200.0).astype(np.float64)
    shifted = shift_pitch(audio, 16000, 1.2)
    assert len(shifted) == len(audio)
    assert abs(dominant_frequency(shifted) - 240.0) < 3.0


def test_formant_shift_keeps_length_and_stays_finite(rng):
    audio = rng.standard_normal(8000) * 0.1
    shifted = shift_formants(audio, 16000, 1.1)
    assert len(shifted) == len(audio)
    assert np.isfinite(shifted).all()


def resonant_tone(f0=125.0, centre=1000.0, width=400.0, sample_rate=16000):
    """One second of a harmonic tone whose partials follow a Gaussian resonance."""
    t = np.arange(sample_rate) / sample_rate
    partials = np.arange(f0, sample_rate / 2, f0)
    gains = np.exp(-0.5 * ((partials - centre) / width) ** 2)
    audio = (gains[:, None] * np.sin(2 * np.pi * partials[:, None] * t)).sum(axis=0)
    return 0.5 * audio / np.abs(audio).max()


def envelope_peak(audio, f0=125.0, band=(500.0, 1750.0)):
    """Vertex of a parabola fitted to the log amplitudes of the partials inside ``band``."""
    spectrum = np.abs(np.fft.rfft(audio * np.hanning(len(audio))))
    partials = np.arange(band[0], band[1] + 1.0, f0)
    amplitudes = [spectrum[int(f) - 2:int(f) + 3].max() for f in partials]
    a, b, _ = np.polyfit(partials, np.log(amplitudes), 2)
    return -b / (2.0 * a)


def harmonic_energy_share(audio, f0=125.0, half_width=4):
    power = np.abs(np.fft.rfft(audio * np.hanning(len(audio)))) ** 2
    near = np.zeros(len(power), dtype=bool)
    for centre in np.arange(f0, len(power) - half_width, f0).astype(int):
        near[centre - half_width:centre + half_width + 1] = True
    return power[near].sum() / power.sum()


def test_formant_shift_moves_the_envelope_and_keeps_the_partials():
    tone = resonant_tone()
    shifted = shift_formants(tone, 16000, 1.1)

    before, after = envelope_peak(tone), envelope_peak(shifted)
    assert before == pytest.approx(1000.0, abs=10.0)
    assert after / before == pytest.approx(1.1, abs=0.025)

    assert abs(dominant_frequency(tone) - 1000.0) <= 2.0
    assert abs(dominant_frequency(shifted) - 1125.0) <= 2.0
    assert harmonic_energy_share(shifted) > 0.9


def test_augmenter_draws_within_ranges_and_calls_perturber(grid):
    calls = []

    def recorder(audio, sample_rate, pitch_mult, formant_mult):
        calls.append((pitch_mult, formant_mult))
        return audio * 0.5

    augmenter = Augmenter(AugmentConfig(), perturber=recorder)
    rng = np.random.default_rng(0)
    audio = np.ones(100, dtype=np.float32)
    for _ in range(200):
        out = augmenter.augment_audio(audio, 16000, rng)
        assert np.allclose(out, 0.5)
    pitches, formants = np.array(calls).T
    assert pitches.min() >= 1 / 1.2 - 1e-9 and pitches.max() <= 1.2 + 1e-9
    assert formants.min() >= 1 / 1.1 - 1e-9 and formants.max() <= 1.1 + 1e-9
    assert (pitches < 1).any() and (pitches > 1).any()


def test_disabled_augmenter_passes_everything_through(grid, rng):
    augmenter = Augmenter(AugmentConfig(freq_mask_enabled=False, pitch_formant_enabled=False))
    mel = ramp_mel(grid)
    audio = np.ones(10, dtype=np.float32)
    assert not augmenter.touches_audio
    assert augmenter.augment_features(mel, rng) is mel
    assert augmenter.augment_audio(audio, 16000, rng) is audio


def test_augment_config_validation():
    with pytest.raises(ValueError):
        AugmentConfig(freq_mask_max=80)
    with pytest.raises(ValueError):
        AugmentConfig(pitch_range=(1.1, 1.2))
