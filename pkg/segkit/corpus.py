"""
TIMIT / Buckeye annotation parsing and split manifests.

TIMIT `.phn` files hold ``<start_sample> <end_sample> <label>`` lines. Buckeye
`.phones` files hold a free-text header closed by a line starting with ``#``,
followed by ``<end_time_s> <color> <label>`` lines.
"""
import logging
import random
from pathlib import Path
from typing import Iterable, List, NamedTuple, Optional, Sequence, TextIO, Tuple, Union

from segkit.errors import AnnotationFormatError, CorpusLayoutError, InputValidationError
from segkit.schemas.boundary import PhoneInterval
from segkit.schemas.corpus import Manifest, ManifestEntry
from segkit.tracing import get_tracer

logger = logging.getLogger(__name__)
tracer = get_tracer()

TextSource = Union[str, TextIO]

# Buckeye marks non-speech with bracketed codes ({B_TRANS}, <SIL>, <NOISE-...>) or bare words.
BUCKEYE_NONSPEECH_LABELS = {
    "sil", "sp", "h#", "noise", "iver", "laugh", "vocnoise", "unknown",
    "interrupt", "cutoff", "lg", "nz", "ns", "ivr",
}
BUCKEYE_MIN_PAUSE_S = 0.150


class BuckeyePhone(NamedTuple):
    end_time_s: float
    phone_label: str


class BuckeyeChunk(NamedTuple):
    start_sample: int
    end_sample: int
    intervals: Tuple[PhoneInterval, ...]


def _read_text(source: TextSource) -> str:
    return source.read() if hasattr(source, "read") else source


def parse_timit_phn(text: TextSource) -> List[PhoneInterval]:
    """Parse a TIMIT `.phn` file into intervals, in file order."""
    content = _read_text(text)
    intervals: List[PhoneInterval] = []
    for line_number, raw_line in enumerate(content.splitlines(), start=1):
        line = raw_line.strip()
        if not line:
            continue

        fields = line.split()
        if len(fields) < 3:
            raise AnnotationFormatError(
                f"line {line_number}: missing field (expected '<start> <end> <label>')",
                line=line_number,
                text=raw_line,
            )
        if len(fields) > 3:
            raise AnnotationFormatError(
                f"line {line_number}: unexpected extra field",
                line=line_number,
                text=raw_line,
            )
        try:
            start, end = int(fields[0]), int(fields[1])
        except ValueError:
            raise AnnotationFormatError(
                f"line {line_number}: sample offsets must be integers",
                line=line_number,
                text=raw_line,
            )
        intervals.append(PhoneInterval(start, end, fields[2]))

    if not intervals:
        raise AnnotationFormatError("empty .phn file", line=0)
    return intervals


def serialize_timit_phn(intervals: Iterable[Tuple[int, int, str]]) -> str:
    return "".join(f"{start} {end} {label}\n" for start, end, label in intervals)


def parse_buckeye_phones(text: TextSource) -> List[BuckeyePhone]:
    """
    Parse a Buckeye `.phones` file into (end_time, label) pairs.

    Equal consecutive times are accepted (zero-length marks); decreasing times are not.
    A missing label is kept as an empty string.
    """
    lines = _read_text(text).splitlines()
    body_start = None
    for index, line in enumerate(lines):
        if line.startswith("#"):
            body_start = index + 1
            break
    if body_start is None:
        raise AnnotationFormatError("missing '#' header terminator", line=len(lines))

    phones: List[BuckeyePhone] = []
    for line_number, raw_line in enumerate(lines[body_start:], start=body_start + 1):
        line = raw_line.strip()
        if not line:
            continue

        fields = line.split(None, 2)
        if len(fields) < 2:
            raise AnnotationFormatError(
                f"line {line_number}: expected '<time> <color> <label>'",
                line=line_number,
                text=raw_line,
            )
        try:
            end_time = float(fields[0])
        except ValueError:
            raise AnnotationFormatError(
                f"line {line_number}: time must be a number",
                line=line_number,
                text=raw_line,
            )
        if phones and end_time < phones[-1].end_time_s:
            raise AnnotationFormatError(
                f"line {line_number}: time {end_time} goes backwards (previous {phones[-1].end_time_s})",
                line=line_number,
                text=raw_line,
            )
        label = fields[2].strip().rstrip(";").strip() if len(fields) == 3 else ""
        phones.append(BuckeyePhone(end_time, label))
    return phones


def serialize_buckeye_phones(phones: Iterable[Tuple[float, str]], header: str = "") -> str:
    lines = [header.rstrip("\n")] if header else []
    lines.append("#")
    lines.extend(f"  {end_time:.6f}  121 {label}" for end_time, label in phones)
    return "\n".join(lines) + "\n"


def is_nonspeech(label: str) -> bool:
    stripped = label.strip()
    if not stripped or stripped[0] in "<{":
        return True
    return stripped.lower() in BUCKEYE_NONSPEECH_LABELS


def buckeye_to_intervals(phones: Sequence[Tuple[float, str]], sample_rate: int) -> List[PhoneInterval]:
    """Turn end-time marks into contiguous sample intervals starting at 0; empty ones vanish."""
    intervals: List[PhoneInterval] = []
    previous = 0
    for end_time, label in phones:
        end = int(round(end_time * sample_rate))
        if end <= previous:
            continue
        intervals.append(PhoneInterval(previous, end, label))
        previous = end
    return intervals


def chunk_buckeye(
    intervals: Sequence[PhoneInterval],
    sample_rate: int,
    min_pause_s: float = BUCKEYE_MIN_PAUSE_S,
) -> List[BuckeyeChunk]:
    """
    Cut a long recording into utterance-like chunks.

    Non-speech intervals longer than ``min_pause_s`` are split at their midpoint: the
    left half closes the current chunk and the right half opens the next one, so
    transitions into and out of pauses stay inside chunks. Chunks without any speech
    interval are dropped.
    """
    min_pause = min_pause_s * sample_rate
    chunks: List[BuckeyeChunk] = []
    current: List[PhoneInterval] = []

    def close(parts: List[PhoneInterval]) -> None:
        if any(not is_nonspeech(part.phone_label) for part in parts):
            chunks.append(BuckeyeChunk(parts[0].start_sample, parts[-1].end_sample, tuple(parts)))

    for interval in intervals:
        length = interval.end_sample - interval.start_sample
        if is_nonspeech(interval.phone_label) and length > min_pause:
            middle = interval.start_sample + length // 2
            current.append(PhoneInterval(interval.start_sample, middle, interval.phone_label))
            close(current)
            current = [PhoneInterval(middle, interval.end_sample, interval.phone_label)]
        else:
            current.append(interval)
    if current:
        close(current)
    return chunks


def slice_intervals(
    intervals: Sequence[PhoneInterval],
    start_sample: int,
    end_sample: Optional[int],
) -> List[PhoneInterval]:
    """Clip intervals to ``[start_sample, end_sample)`` and re-base them at 0."""
    stop = end_sample if end_sample is not None else intervals[-1].end_sample
    clipped: List[PhoneInterval] = []
    for start, end, label in intervals:
        lo, hi = max(start, start_sample), min(end, stop)
        if hi > lo:
            clipped.append(PhoneInterval(lo - start_sample, hi - start_sample, label))
    return clipped


def load_entry_intervals(entry: ManifestEntry, sample_rate: int) -> List[PhoneInterval]:
    """Read an entry's annotation and return its intervals relative to the entry start."""
    text = Path(entry.annotation_path).read_text(encoding="utf-8", errors="replace")
    if entry.annotation_format == "buckeye":
        intervals = buckeye_to_intervals(parse_buckeye_phones(text), sample_rate)
    else:
        intervals = parse_timit_phn(text)
    if entry.start_sample == 0 and entry.end_sample is None:
        return intervals
    return slice_intervals(intervals, entry.start_sample, entry.end_sample)


def _child_dir(root: Path, name: str) -> Optional[Path]:
    for child in sorted(root.iterdir()):
        if child.is_dir() and child.name.lower() == name.lower():
            return child
    return None


def _sibling(path: Path, suffix: str) -> Optional[Path]:
    for candidate in (path.with_suffix(suffix.lower()), path.with_suffix(suffix.upper())):
        if candidate.is_file():
            return candidate
    return None


def _audio_files(directory: Path) -> List[Path]:
    return sorted(path for path in directory.rglob("*") if path.is_file() and path.suffix.lower() == ".wav")


def _pair_annotations(directory: Path, suffix: str) -> List[Tuple[Path, Path]]:
    pairs, missing = [], []
    for audio_path in _audio_files(directory):
        annotation = _sibling(audio_path, suffix)
        if annotation is None:
            missing.append(str(audio_path.with_suffix(suffix)))
        else:
            pairs.append((audio_path, annotation))
    if missing:
        raise CorpusLayoutError(
            f"{len(missing)} annotation file(s) missing under {directory}: {', '.join(missing[:10])}",
            missing=missing,
        )
    return pairs


def assign_utterance_splits(
    utterance_ids: Sequence[str],
    ratios: Tuple[int, int, int],
    seed: int,
) -> dict:
    """Seeded utterance-level split at ``train:val:test`` ratios."""
    ordered = sorted(utterance_ids)
    random.Random(seed).shuffle(ordered)
    total = sum(ratios)
    n_val = int(round(len(ordered) * ratios[1] / total))
    n_test = int(round(len(ordered) * ratios[2] / total))
    assignment = {}
    for index, utterance_id in enumerate(ordered):
        if index < n_val:
            assignment[utterance_id] = "val"
        elif index < n_val + n_test:
            assignment[utterance_id] = "test"
        else:
            assignment[utterance_id] = "train"
    return assignment


def build_timit_manifest(root: Union[str, Path], val_fraction: float = 0.1, seed: int = 0) -> Manifest:
    """
    TIMIT protocol: TEST is the test split as is; TRAIN is split train/val by a
    seeded shuffle of utterance ids at ``1 - val_fraction : val_fraction``.
    """
    root = Path(root)
    if not 0.0 <= val_fraction < 1.0:
        raise InputValidationError("val_fraction must be in [0, 1)", val_fraction=val_fraction)
    if not root.is_dir():
        raise CorpusLayoutError(f"TIMIT root {root} does not exist", path=str(root))

    train_dir, test_dir = _child_dir(root, "TRAIN"), _child_dir(root, "TEST")
    missing = [name for name, found in (("TRAIN", train_dir), ("TEST", test_dir)) if found is None]
    if missing:
        raise CorpusLayoutError(f"TIMIT root {root} lacks {', '.join(missing)} directory", missing=missing)

    with tracer.start_as_current_span("build-timit-manifest") as span:
        def entries_for(directory: Path, default_split: str) -> List[ManifestEntry]:
            return [
                ManifestEntry(
                    utterance_id=audio.relative_to(root).with_suffix("").as_posix(),
                    audio_path=audio,
                    annotation_path=annotation,
                    speaker_id=audio.parent.name,
                    split=default_split,
                    annotation_format="timit",
                )
                for audio, annotation in _pair_annotations(directory, ".phn")
            ]

        train_entries = entries_for(train_dir, "train")
        shuffled = sorted(entry.utterance_id for entry in train_entries)
        random.Random(seed).shuffle(shuffled)
        val_ids = set(shuffled[: int(round(len(shuffled) * val_fraction))])
        train_entries = [
            entry.model_copy(update={"split": "val"}) if entry.utterance_id in val_ids else entry
            for entry in train_entries
        ]
        manifest = Manifest(entries=tuple(train_entries + entries_for(test_dir, "test")), seed=seed)
        span.set_attribute("manifest.sizes", manifest.split_sizes())
        return manifest


def split_speakers(speakers: Sequence[str], ratios: Tuple[int, int, int], seed: int) -> dict:
    """Seeded speaker-level split; every split receives at least one speaker."""
    if len(speakers) < 3:
        raise InputValidationError(
            f"need at least 3 speakers for a speaker-disjoint split, found {len(speakers)}",
            speakers=list(speakers),
        )
    if len(ratios) != 3 or any(ratio <= 0 for ratio in ratios):
        raise InputValidationError("ratios must be three positive numbers", ratios=ratios)

    ordered = sorted(speakers)
    random.Random(seed).shuffle(ordered)
    total = sum(ratios)
    n_val = max(1, int(round(len(ordered) * ratios[1] / total)))
    n_test = max(1, int(round(len(ordered) * ratios[2] / total)))
    n_train = len(ordered) - n_val - n_test
    if n_train < 1:
        n_train, n_val, n_test = 1, 1, len(ordered) - 2

    assignment = {speaker: "train" for speaker in ordered[:n_train]}
    assignment.update({speaker: "val" for speaker in ordered[n_train:n_train + n_val]})
    assignment.update({speaker: "test" for speaker in ordered[n_train + n_val:]})
    return assignment


def build_buckeye_manifest(
    root: Union[str, Path],
    ratios: Tuple[int, int, int] = (8, 1, 1),
    seed: int = 0,
    sample_rate: int = 16000,
    min_pause_s: float = BUCKEYE_MIN_PAUSE_S,
) -> Manifest:
    """Speaker-disjoint 8:1:1 split of Buckeye, one entry per pause-delimited chunk."""
    root = Path(root)
    if not root.is_dir():
        raise CorpusLayoutError(f"Buckeye root {root} does not exist", path=str(root))

    speaker_dirs = [child for child in sorted(root.iterdir()) if child.is_dir()]
    assignment = split_speakers([child.name for child in speaker_dirs], ratios, seed)

    with tracer.start_as_current_span("build-buckeye-manifest") as span:
        entries: List[ManifestEntry] = []
        for speaker_dir in speaker_dirs:
            for audio, annotation in _pair_annotations(speaker_dir, ".phones"):
                text = annotation.read_text(encoding="utf-8", errors="replace")
                intervals = buckeye_to_intervals(parse_buckeye_phones(text), sample_rate)
                recording = audio.relative_to(root).with_suffix("").as_posix()
                for index, chunk in enumerate(chunk_buckeye(intervals, sample_rate, min_pause_s)):
                    entries.append(ManifestEntry(
                        utterance_id=f"{recording}/{index:03d}",
                        audio_path=audio,
                        annotation_path=annotation,
                        speaker_id=speaker_dir.name,
                        split=assignment[speaker_dir.name],
                        annotation_format="buckeye",
                        start_sample=chunk.start_sample,
                        end_sample=chunk.end_sample,
                    ))
        manifest = Manifest(entries=tuple(entries), seed=seed)
        span.set_attribute("manifest.sizes", manifest.split_sizes())
        return manifest


def build_synthetic_manifest(
    root: Union[str, Path],
    ratios: Tuple[int, int, int] = (8, 1, 1),
    seed: int = 0,
) -> Manifest:
    """Utterance-level split of a generated corpus (flat directory of `.wav` + `.phn`)."""
    root = Path(root)
    if not root.is_dir():
        raise CorpusLayoutError(f"synthetic corpus {root} does not exist", path=str(root))
    pairs = _pair_annotations(root, ".phn")
    if not pairs:
        raise CorpusLayoutError(f"no audio files under {root}", path=str(root))

    ids = [audio.relative_to(root).with_suffix("").as_posix() for audio, _ in pairs]
    assignment = assign_utterance_splits(ids, ratios, seed)
    entries = [
        ManifestEntry(
            utterance_id=utterance_id,
            audio_path=audio,
            annotation_path=annotation,
            speaker_id="synthetic",
            split=assignment[utterance_id],
            annotation_format="timit",
        )
        for utterance_id, (audio, annotation) in zip(ids, pairs)
    ]
    return Manifest(entries=tuple(entries), seed=seed)
