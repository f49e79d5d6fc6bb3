"""Conversions between phone intervals, boundary frame lists and frame labels."""
from typing import Iterable, List, Sequence, Tuple

from segkit.errors import IntervalOrderError
from segkit.schemas.boundary import (
    BoundarySequence,
    FrameGrid,
    FrameLabelSequence,
    PhoneInterval,
)


def validate_intervals(intervals: Sequence[Tuple[int, int, str]]) -> List[PhoneInterval]:
    """Return the intervals as `PhoneInterval`s, rejecting gaps, overlaps and disorder."""
    checked = [PhoneInterval(int(start), int(end), str(label)) for start, end, label in intervals]
    for index, interval in enumerate(checked):
        if interval.end_sample <= interval.start_sample:
            raise IntervalOrderError(
                f"interval {index} ends at {interval.end_sample} but starts at {interval.start_sample}",
                pair=(index, index),
                interval=tuple(interval),
            )
    for index, (current, following) in enumerate(zip(checked, checked[1:])):
        if following.start_sample != current.end_sample:
            kind = "overlap" if following.start_sample < current.end_sample else "gap"
            raise IntervalOrderError(
                f"intervals {index} and {index + 1} are not contiguous ({kind}: "
                f"{tuple(current)} then {tuple(following)})",
                pair=(index, index + 1),
                intervals=(tuple(current), tuple(following)),
            )
    return checked


def intervals_to_boundaries(
    intervals: Sequence[Tuple[int, int, str]],
    grid: FrameGrid,
    total_frames: int,
    *,
    include_edges: bool = False,
) -> BoundarySequence:
    """
    Map phone transitions onto the frame grid.

    Every start of a non-first interval becomes a boundary at floor(sample / hop).
    Transitions landing on the same frame collapse and frames >= T are dropped. The
    utterance edges (sample 0 and the final end) only count with ``include_edges``;
    the final edge is then clamped to the last frame.
    """
    checked = validate_intervals(intervals)
    samples = [interval.start_sample for interval in checked[1:]]
    if include_edges and checked:
        samples = [checked[0].start_sample] + samples

    frames = sorted({grid.frame_of_sample(sample) for sample in samples})
    frames = [frame for frame in frames if frame < total_frames]
    if include_edges and checked:
        final = min(grid.frame_of_sample(checked[-1].end_sample), total_frames - 1)
        if not frames or frames[-1] < final:
            frames.append(final)
    return BoundarySequence(frames=tuple(frames), total_frames=total_frames)


def boundaries_to_labels(boundaries: BoundarySequence) -> FrameLabelSequence:
    labels = [0] * boundaries.total_frames
    for frame in boundaries.frames:
        labels[frame] = 1
    return FrameLabelSequence(labels=tuple(labels))


def labels_to_boundaries(labels: FrameLabelSequence) -> BoundarySequence:
    return BoundarySequence(
        frames=tuple(t for t, label in enumerate(labels.labels) if label == 1),
        total_frames=labels.total_frames,
    )


def boundaries_from_frames(frames: Iterable[int], total_frames: int) -> BoundarySequence:
    """Build a sequence from any iterable of frame indices (numpy ints included)."""
    return BoundarySequence(frames=tuple(int(frame) for frame in frames), total_frames=int(total_frames))


def boundaries_to_seconds(boundaries: BoundarySequence, grid: FrameGrid) -> List[float]:
    """Frame starts in seconds, rounded to the millisecond grid used in boundary files."""
    return [round(frame * grid.hop_s, 3) for frame in boundaries.frames]
