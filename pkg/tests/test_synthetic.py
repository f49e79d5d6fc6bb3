import numpy as np
import pytest

from segkit.audio import load_audio
from segkit.corpus import parse_timit_phn
from segkit.schemas.run import SyntheticSpec
from segkit.synthetic import (
    draw_segment_durations,
    generate_corpus,
    synthesize_utterance,
    template_bank,
    utterance_id,
)

SMALL = SyntheticSpec(n_utterances=4, min_duration_s=0.3, max_duration_s=0.6, seed=3)


def corpus_bytes(root):
    return {path.name: path.read_bytes() for path in sorted(root.iterdir())}


def test_same_seed_gives_identical_files(tmp_path):
    generate_corpus(SMALL, tmp_path / "a")
    generate_corpus(SMALL, tmp_path / "b")
    first, second = corpus_bytes(tmp_path / "a"), corpus_bytes(tmp_path / "b")
    assert len(first) == 8
    assert first == second


def test_other_seed_gives_other_audio(tmp_path):
    generate_corpus(SMALL, tmp_path / "a")
    generate_corpus(SMALL.model_copy(update={"seed": 4}), tmp_path / "b")
    name = f"{utterance_id(0)}.wav"
    assert (tmp_path / "a" / name).read_bytes() != (tmp_path / "b" / name).read_bytes()


def test_annotations_match_the_rendered_audio(tmp_path):
    generate_corpus(SMALL, tmp_path)
    bank = template_bank(SMALL)
    for index in range(SMALL.n_utterances):
        audio, intervals = synthesize_utterance(SMALL, index, bank)
        stem = tmp_path / utterance_id(index)
        assert parse_timit_phn((stem.with_suffix(".phn")).read_text()) == intervals
        assert len(load_audio(stem.with_suffix(".wav"))) == len(audio)


def test_intervals_tile_the_utterance():
    bank = template_bank(SMALL)
    for index in range(10):
        audio, intervals = synthesize_utterance(SMALL, index, bank)
        assert intervals[0].start_sample == 0
        assert intervals[-1].end_sample == len(audio)
        assert all(a.end_sample == b.start_sample for a, b in zip(intervals, intervals[1:]))
        assert all(a.phone_label != b.phone_label for a, b in zip(intervals, intervals[1:]))
        assert SMALL.min_duration_s * 16000 - 1 <= len(audio) <= SMALL.max_duration_s * 16000 + 1
        assert np.max(np.abs(audio)) == pytest.approx(SMALL.peak, rel=1e-5)


def test_template_bank_labels_are_distinct():
    bank = template_bank(SyntheticSpec())
    assert len({template.label for template in bank}) == 24
    assert all(50.0 <= template.low_hz < template.high_hz <= 8000.0 for template in bank)


def test_segment_durations_follow_the_log_normal_mean():
    spec = SyntheticSpec()
    durations = draw_segment_durations(np.random.default_rng(0), 100.0, spec)
    assert sum(durations) == pytest.approx(100.0)
    assert abs(np.mean(durations[:-1]) - spec.mean_segment_s) <= 0.1 * spec.mean_segment_s


def test_short_tail_is_merged():
    spec = SyntheticSpec()
    for seed in range(50):
        durations = draw_segment_durations(np.random.default_rng(seed), 0.5, spec)
        assert sum(durations) == pytest.approx(0.5)
        assert len(durations) == 1 or durations[-1] >= spec.min_segment_s


def test_synthetic_split(synthetic_corpus, tiny_spec):
    _, manifest = synthetic_corpus
    assert sum(manifest.split_sizes().values()) == tiny_spec.n_utterances
    assert manifest.split_sizes() == {"train": 16, "val": 2, "test": 2}


def test_duration_range_must_be_ordered():
    with pytest.raises(ValueError):
        SyntheticSpec(min_duration_s=2.0, max_duration_s=1.0)
