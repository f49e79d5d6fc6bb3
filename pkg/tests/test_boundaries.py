import numpy as np
import pytest
from pydantic import ValidationError

from segkit.boundaries import (
    boundaries_from_frames,
    boundaries_to_labels,
    boundaries_to_seconds,
    intervals_to_boundaries,
    labels_to_boundaries,
    validate_intervals,
)
from segkit.errors import IntervalOrderError
from segkit.schemas.boundary import BoundarySequence, FrameGrid, FrameLabelSequence

THREE_PHONES = [(0, 1600, "h#"), (1600, 3200, "ae"), (3200, 4800, "h#")]


def test_interval_starts_map_to_frames(grid):
    """Each non-first interval start becomes floor(sample / hop)."""
    result = intervals_to_boundaries(THREE_PHONES, grid, 30)
    assert result.frames == (10, 20)
    assert result.total_frames == 30


def test_edges_are_optional_and_final_edge_is_clamped(grid):
    result = intervals_to_boundaries(THREE_PHONES, grid, 30, include_edges=True)
    assert result.frames == (0, 10, 20, 29)


def test_transitions_in_one_frame_collapse(grid):
    intervals = [(0, 1600, "a"), (1600, 1650, "b"), (1650, 3200, "c")]
    assert intervals_to_boundaries(intervals, grid, 20).frames == (10,)


def test_frames_beyond_utterance_are_dropped(grid):
    assert intervals_to_boundaries(THREE_PHONES, grid, 15).frames == (10,)


def test_gap_between_intervals_is_rejected(grid):
    with pytest.raises(IntervalOrderError) as excinfo:
        intervals_to_boundaries([(0, 100, "a"), (120, 200, "b")], grid, 2)
    assert excinfo.value.context["pair"] == (0, 1)
    assert "gap" in str(excinfo.value)


def test_overlap_is_rejected():
    with pytest.raises(IntervalOrderError) as excinfo:
        validate_intervals([(0, 100, "a"), (90, 200, "b")])
    assert "overlap" in str(excinfo.value)


def test_empty_interval_is_rejected():
    with pytest.raises(IntervalOrderError):
        validate_intervals([(0, 100, "a"), (100, 100, "b")])


def test_labels_round_trip():
    sequence = BoundarySequence(frames=(0, 3, 7), total_frames=8)
    labels = boundaries_to_labels(sequence)
    assert labels.labels == (1, 0, 0, 1, 0, 0, 0, 1)
    assert labels_to_boundaries(labels) == sequence


def test_labels_round_trip_on_random_sequences():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        total = int(rng.integers(1, 200))
        frames = np.sort(rng.choice(total, size=int(rng.integers(0, total + 1)), replace=False))
        sequence = boundaries_from_frames(frames, total)
        labels = boundaries_to_labels(sequence)
        assert labels.total_frames == total
        assert sum(labels.labels) == len(sequence.frames)
        assert labels_to_boundaries(labels) == sequence

        drawn = FrameLabelSequence(labels=tuple(int(v) for v in rng.integers(0, 2, size=total)))
        assert boundaries_to_labels(labels_to_boundaries(drawn)) == drawn


def test_labels_without_boundaries():
    labels = FrameLabelSequence(labels=(0, 0, 0))
    assert labels_to_boundaries(labels).frames == ()


def test_boundary_sequence_invariants():
    with pytest.raises(ValidationError):
        BoundarySequence(frames=(3, 3), total_frames=10)
    with pytest.raises(ValidationError):
        BoundarySequence(frames=(5, 2), total_frames=10)
    with pytest.raises(ValidationError):
        BoundarySequence(frames=(10,), total_frames=10)
    with pytest.raises(ValidationError):
        BoundarySequence(frames=(), total_frames=0)


def test_labels_must_be_binary():
    with pytest.raises(ValidationError):
        FrameLabelSequence(labels=(0, 2))


def test_boundaries_from_numpy_frames():
    import numpy as np

    result = boundaries_from_frames(np.array([1, 4], dtype=np.int64), 6)
    assert result.frames == (1, 4)
    assert all(type(frame) is int for frame in result.frames)


def test_seconds_are_frame_starts(grid):
    assert boundaries_to_seconds(BoundarySequence(frames=(10, 25, 133), total_frames=200), grid) == [0.1, 0.25, 1.33]


def test_grid_rejects_fractional_hop():
    with pytest.raises(ValidationError):
        FrameGrid(hop_s=0.01001)
    with pytest.raises(ValidationError):
        FrameGrid(hop_s=0.02, window_s=0.01)


def test_grid_conversions(grid):
    assert grid.hop_samples == 160
    assert grid.window_samples == 640
    assert grid.frame_of_sample(159) == 0
    assert grid.frame_of_sample(160) == 1
    assert grid.frames_in(16000) == 100
