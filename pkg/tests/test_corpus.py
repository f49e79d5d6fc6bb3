import io

import pytest

from segkit.corpus import (
    build_buckeye_manifest,
    build_synthetic_manifest,
    build_timit_manifest,
    buckeye_to_intervals,
    chunk_buckeye,
    is_nonspeech,
    load_entry_intervals,
    parse_buckeye_phones,
    parse_timit_phn,
    serialize_buckeye_phones,
    serialize_timit_phn,
    split_speakers,
)
from segkit.errors import AnnotationFormatError, CorpusLayoutError, InputValidationError
from segkit.schemas.boundary import PhoneInterval
from segkit.schemas.corpus import ManifestEntry

TIMIT_TEXT = "0 2400 h#\n2400 3520 sh\n3520 5200 iy\n5200 7000 h#\n"

BUCKEYE_TEXT = """signal s0101a
type 0
color 121
comment created by hand
font -misc-*-bold-*-*-*-15-*-*-*-*-*-*-*
separator ;
nfields 1
#
    0.100000  122 {B_TRANS}
    0.200000  122 h
    0.350000  122 ae;
    0.700000  122 SIL
    0.800000  122 t
    0.900000  122 {E_TRANS}
"""


def touch(path, text=""):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def test_parse_timit_phn():
    intervals = parse_timit_phn(TIMIT_TEXT)
    assert intervals[0] == PhoneInterval(0, 2400, "h#")
    assert [interval.phone_label for interval in intervals] == ["h#", "sh", "iy", "h#"]


def test_timit_round_trip_preserves_content():
    assert serialize_timit_phn(parse_timit_phn(TIMIT_TEXT)) == TIMIT_TEXT


def test_parse_timit_from_stream():
    assert len(parse_timit_phn(io.StringIO(TIMIT_TEXT))) == 4


def test_timit_missing_field_reports_line():
    with pytest.raises(AnnotationFormatError) as excinfo:
        parse_timit_phn("0 2400 h#\n2400 3520\n")
    assert excinfo.value.context["line"] == 2


@pytest.mark.parametrize("text", ["0 10 a b\n", "0 x a\n", "", "\n\n"])
def test_timit_malformed_files(text):
    with pytest.raises(AnnotationFormatError):
        parse_timit_phn(text)


def test_parse_buckeye_phones():
    phones = parse_buckeye_phones(BUCKEYE_TEXT)
    assert [phone.phone_label for phone in phones] == ["{B_TRANS}", "h", "ae", "SIL", "t", "{E_TRANS}"]
    assert phones[2].end_time_s == pytest.approx(0.35)


def test_buckeye_needs_header_terminator():
    with pytest.raises(AnnotationFormatError):
        parse_buckeye_phones("signal x\n 0.1 122 a\n")


def test_buckeye_time_must_not_decrease():
    with pytest.raises(AnnotationFormatError) as excinfo:
        parse_buckeye_phones("#\n 0.5 122 a\n 0.4 122 b\n")
    assert excinfo.value.context["line"] == 3


def test_buckeye_accepts_equal_times_and_missing_labels():
    phones = parse_buckeye_phones("#\n 0.5 122 a\n 0.5 122 b\n 0.7 122\n")
    assert [phone.phone_label for phone in phones] == ["a", "b", ""]


def test_buckeye_round_trip():
    phones = parse_buckeye_phones(BUCKEYE_TEXT)
    assert parse_buckeye_phones(serialize_buckeye_phones(phones, header="signal s0101a")) == phones


def test_nonspeech_labels():
    assert is_nonspeech("SIL")
    assert is_nonspeech("{B_TRANS}")
    assert is_nonspeech("<NOISE-laugh>")
    assert is_nonspeech("")
    assert not is_nonspeech("ae")


def test_buckeye_intervals_are_contiguous_from_zero():
    intervals = buckeye_to_intervals(parse_buckeye_phones(BUCKEYE_TEXT), 16000)
    assert intervals[0] == PhoneInterval(0, 1600, "{B_TRANS}")
    assert all(a.end_sample == b.start_sample for a, b in zip(intervals, intervals[1:]))
    assert intervals[-1].end_sample == 14400


def test_buckeye_drops_zero_length_marks():
    intervals = buckeye_to_intervals([(0.1, "a"), (0.1, "b"), (0.2, "c")], 16000)
    assert [interval.phone_label for interval in intervals] == ["a", "c"]


def test_long_pause_splits_at_its_midpoint():
    intervals = buckeye_to_intervals(parse_buckeye_phones(BUCKEYE_TEXT), 16000)
    chunks = chunk_buckeye(intervals, 16000)
    assert [(chunk.start_sample, chunk.end_sample) for chunk in chunks] == [(0, 8400), (8400, 14400)]
    assert chunks[0].intervals[-1] == PhoneInterval(5600, 8400, "SIL")
    assert chunks[1].intervals[0] == PhoneInterval(8400, 11200, "SIL")


def test_short_pause_does_not_split():
    intervals = [PhoneInterval(0, 1600, "a"), PhoneInterval(1600, 3200, "SIL"), PhoneInterval(3200, 4800, "b")]
    assert len(chunk_buckeye(intervals, 16000)) == 1


def test_timit_manifest_keeps_test_and_splits_train(tmp_path):
    for index in range(20):
        speaker = f"M{index % 4:03d}"
        touch(tmp_path / "TRAIN" / "DR1" / speaker / f"SX{index}.WAV")
        touch(tmp_path / "TRAIN" / "DR1" / speaker / f"SX{index}.PHN", TIMIT_TEXT)
    for index in range(5):
        touch(tmp_path / "TEST" / "DR2" / "F001" / f"SI{index}.WAV")
        touch(tmp_path / "TEST" / "DR2" / "F001" / f"SI{index}.PHN", TIMIT_TEXT)

    manifest = build_timit_manifest(tmp_path, val_fraction=0.1, seed=3)
    assert manifest.split_sizes() == {"train": 18, "val": 2, "test": 5}
    assert manifest.split("test")[0].speaker_id == "F001"
    assert manifest.split("test")[0].utterance_id.startswith("TEST/DR2/F001/")
    again = build_timit_manifest(tmp_path, val_fraction=0.1, seed=3)
    assert again == manifest


def test_timit_manifest_lists_missing_annotations(tmp_path):
    touch(tmp_path / "TRAIN" / "DR1" / "M001" / "SA1.WAV")
    touch(tmp_path / "TRAIN" / "DR1" / "M001" / "SA2.WAV")
    touch(tmp_path / "TEST" / "DR1" / "M002" / "SA1.WAV")
    touch(tmp_path / "TEST" / "DR1" / "M002" / "SA1.PHN", TIMIT_TEXT)
    with pytest.raises(CorpusLayoutError) as excinfo:
        build_timit_manifest(tmp_path)
    assert len(excinfo.value.context["missing"]) == 2


def test_timit_manifest_needs_both_directories(tmp_path):
    (tmp_path / "TRAIN").mkdir()
    with pytest.raises(CorpusLayoutError):
        build_timit_manifest(tmp_path)


def test_buckeye_manifest_is_speaker_disjoint(tmp_path):
    for speaker in ("s01", "s02", "s03", "s04", "s05"):
        touch(tmp_path / speaker / f"{speaker}01a.wav")
        touch(tmp_path / speaker / f"{speaker}01a.phones", BUCKEYE_TEXT)

    manifest = build_buckeye_manifest(tmp_path, ratios=(3, 1, 1), seed=1)
    assert manifest.speakers_are_disjoint()
    assert all(len(speakers) >= 1 for speakers in manifest.speakers_by_split().values())
    assert len(manifest.entries) == 10
    first = manifest.entries[0]
    assert first.utterance_id == "s01/s0101a/000"
    assert (first.start_sample, first.end_sample) == (0, 8400)


def test_buckeye_speakers_stay_in_one_split_for_any_seed(tmp_path):
    speakers = [f"s{index:02d}" for index in range(1, 13)]
    for speaker in speakers:
        for take in ("a", "b"):
            touch(tmp_path / speaker / f"{speaker}01{take}.wav")
            touch(tmp_path / speaker / f"{speaker}01{take}.phones", BUCKEYE_TEXT)

    layouts = set()
    for seed in range(100):
        manifest = build_buckeye_manifest(tmp_path, ratios=(8, 1, 1), seed=seed)
        assert len(manifest.entries) == 4 * len(speakers)
        splits_of = {}
        for entry in manifest.entries:
            splits_of.setdefault(entry.speaker_id, set()).add(entry.split)
        assert sorted(splits_of) == speakers
        assert all(len(splits) == 1 for splits in splits_of.values()), seed
        assert manifest.speakers_are_disjoint()
        assert all(manifest.speakers_by_split().values())
        layouts.add(tuple(sorted((speaker, *splits) for speaker, splits in splits_of.items())))
    assert len(layouts) > 1


def test_speaker_split_needs_three_speakers():
    with pytest.raises(InputValidationError):
        split_speakers(["a", "b"], (8, 1, 1), 0)


def test_speaker_split_is_seeded():
    speakers = [f"s{index:02d}" for index in range(40)]
    first = split_speakers(speakers, (8, 1, 1), 5)
    assert first == split_speakers(speakers, (8, 1, 1), 5)
    assert sorted(first.values()).count("val") == 4


def test_synthetic_manifest_split(tmp_path):
    for index in range(10):
        touch(tmp_path / f"syn{index:04d}.wav")
        touch(tmp_path / f"syn{index:04d}.phn", TIMIT_TEXT)
    manifest = build_synthetic_manifest(tmp_path, (8, 1, 1), seed=0)
    assert manifest.split_sizes() == {"train": 8, "val": 1, "test": 1}


def test_chunk_entry_intervals_are_rebased(tmp_path):
    annotation = touch(tmp_path / "s01.phones", BUCKEYE_TEXT)
    entry = ManifestEntry(
        utterance_id="s01/000",
        audio_path=tmp_path / "s01.wav",
        annotation_path=annotation,
        speaker_id="s01",
        split="train",
        annotation_format="buckeye",
        start_sample=8400,
        end_sample=14400,
    )
    intervals = load_entry_intervals(entry, 16000)
    assert intervals[0] == PhoneInterval(0, 2800, "SIL")
    assert intervals[-1].end_sample == 6000
