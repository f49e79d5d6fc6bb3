import numpy as np
import pytest

from segkit.audio import load_audio, sniff_audio_format, write_wav
from segkit.errors import InputValidationError, NumericalError, RecordFormatError
from segkit.features import LOG_FLOOR, align_frames, logmel, mel_center_frequencies, mel_filterbank
from segkit.schemas.features import MelFrames


def sine(frequency, seconds=1.0, sample_rate=16000, amplitude=0.5):
    t = np.arange(int(seconds * sample_rate)) / sample_rate
    return (amplitude * np.sin(2 * np.pi * frequency * t)).astype(np.float32)


def sphere_bytes(samples, byte_format="01"):
    dtype = "<i2" if byte_format == "01" else ">i2"
    header = (
        "NIST_1A\n   1024\n"
        "sample_rate -i 16000\n"
        "channel_count -i 1\n"
        "sample_n_bytes -i 2\n"
        f"sample_count -i {len(samples)}\n"
        f"sample_byte_format -s2 {byte_format}\n"
        "sample_coding -s3 pcm\n"
        "end_head\n"
    ).encode("ascii")
    return header.ljust(1024, b" ") + np.asarray(samples, dtype=dtype).tobytes()


def test_one_second_gives_one_hundred_frames(grid, rng):
    mel = logmel(rng.standard_normal(16000) * 0.1, 16000, grid)
    assert mel.values.shape == (100, 80)
    assert mel.values.dtype == np.float32


def test_frame_count_truncates_partial_hop(grid, rng):
    assert logmel(rng.standard_normal(16159) * 0.1, 16000, grid).total_frames == 100


def test_silence_hits_the_log_floor(grid):
    mel = logmel(np.zeros(3200), 16000, grid)
    np.testing.assert_allclose(mel.values, np.log(LOG_FLOOR), rtol=1e-6)


def test_sine_peaks_in_matching_channel(grid):
    mel = logmel(sine(1000.0), 16000, grid)
    expected = int(np.argmin(np.abs(mel_center_frequencies() - 1000.0)))
    peak = int(np.argmax(mel.values[50]))
    assert abs(peak - expected) <= 1


def test_filterbank_shape_and_range():
    basis = mel_filterbank(16000, 1024, 80)
    assert basis.shape == (80, 513)
    assert basis.max() <= 1.0 + 1e-6
    assert (basis.sum(axis=1) > 0).all()


@pytest.mark.parametrize(
    "audio, sample_rate",
    [
        (np.zeros(100), 16000),
        (np.zeros(0), 16000),
        (np.array([0.0, np.nan] * 400), 16000),
        (np.zeros(16000), 8000),
    ],
)
def test_unusable_audio_is_rejected(grid, audio, sample_rate):
    with pytest.raises(InputValidationError):
        logmel(audio, sample_rate, grid)


def test_align_pads_with_last_frame(grid):
    mel = MelFrames(values=np.arange(12, dtype=np.float32).reshape(4, 3), grid=grid)
    padded = align_frames(mel, 6)
    assert padded.total_frames == 6
    np.testing.assert_array_equal(padded.values[4], mel.values[3])
    np.testing.assert_array_equal(padded.values[5], mel.values[3])
    assert align_frames(mel, 3).total_frames == 3
    assert align_frames(mel, 4) is mel


def test_align_refuses_large_mismatch(grid):
    mel = MelFrames(values=np.zeros((10, 3)), grid=grid)
    with pytest.raises(InputValidationError):
        align_frames(mel, 13)


def test_mel_frames_reject_non_finite(grid):
    with pytest.raises(NumericalError):
        MelFrames(values=np.array([[0.0, np.inf]]), grid=grid)


def test_wav_round_trip(tmp_path):
    audio = sine(440.0, seconds=0.25)
    write_wav(tmp_path / "tone.wav", audio)
    assert sniff_audio_format(tmp_path / "tone.wav") == "wav"
    loaded = load_audio(tmp_path / "tone.wav")
    assert loaded.shape == audio.shape
    np.testing.assert_allclose(loaded, audio, atol=2.0 / 32768)


def test_wav_segment_and_rate_check(tmp_path):
    write_wav(tmp_path / "tone.wav", sine(440.0, seconds=0.5), sample_rate=16000)
    assert load_audio(tmp_path / "tone.wav", 1000, 2000).shape == (1000,)
    with pytest.raises(RecordFormatError):
        load_audio(tmp_path / "tone.wav", expected_rate=8000)


@pytest.mark.parametrize("byte_format", ["01", "10"])
def test_sphere_in_either_byte_order(tmp_path, byte_format):
    samples = np.array([0, 1000, -1000, 32767, -32768, 5], dtype=np.int16)
    path = tmp_path / "utt.wav"
    path.write_bytes(sphere_bytes(samples, byte_format))
    assert sniff_audio_format(path) == "sphere"
    np.testing.assert_allclose(load_audio(path), samples / 32768.0)


def test_unknown_audio_format(tmp_path):
    path = tmp_path / "noise.bin"
    path.write_bytes(b"\x00" * 64)
    with pytest.raises(RecordFormatError):
        load_audio(path)
