"""
Boundary hit counting, precision/recall/F1/R-value and corpus aggregation.

Two hit-counting schemes are provided. The conventional one counts every element of
A that has some element of B within gamma, so one B element may serve many A
elements. The proposed one walks A in order and consumes the first remaining B
element within gamma, so each boundary contributes at most once.

Empty reference rule: a ratio whose reference list is empty is 1.0 (vacuous).
"""
import bisect
import logging
import math
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from segkit.errors import InputValidationError
from segkit.schemas.boundary import BoundarySequence
from segkit.schemas.metrics import Aggregation, CorpusScore, PairScore, Scheme, Tolerance

logger = logging.getLogger(__name__)

ORACLE_MAX_SIZE = 2000

Boundaries = Union[BoundarySequence, Sequence[int]]
ToleranceLike = Union[Tolerance, int]


def _frames(boundaries: Boundaries) -> List[int]:
    if isinstance(boundaries, BoundarySequence):
        return list(boundaries.frames)
    return [int(frame) for frame in boundaries]


def _gamma(tolerance: ToleranceLike) -> int:
    gamma = tolerance.gamma_frames if isinstance(tolerance, Tolerance) else int(tolerance)
    if gamma < 0:
        raise InputValidationError("tolerance must be non-negative", gamma=gamma)
    return gamma


def _ratio(n_hit: int, n_reference: int) -> float:
    return 1.0 if n_reference == 0 else n_hit / n_reference


def proposed_hit_ratio(a: Boundaries, b: Boundaries, tolerance: ToleranceLike) -> Tuple[int, float]:
    """
    Sequential hit counting: each a_i claims the first unclaimed b_j with |a_i - b_j| <= gamma.

    Both lists are sorted, so the scan over B stops once b_j > a_i + gamma.
    """
    gamma = _gamma(tolerance)
    reference = _frames(a)
    remaining = _frames(b)
    n_hit = 0
    for a_i in reference:
        for j, b_j in enumerate(remaining):
            if b_j > a_i + gamma:
                break
            if abs(a_i - b_j) <= gamma:
                n_hit += 1
                del remaining[j]
                break
    return n_hit, _ratio(n_hit, len(reference))


def conventional_hit_ratio(a: Boundaries, b: Boundaries, tolerance: ToleranceLike) -> Tuple[int, float]:
    """Element-wise hit counting: a counts when any b lies within gamma."""
    gamma = _gamma(tolerance)
    reference = _frames(a)
    candidates = _frames(b)
    n_hit = 0
    for a_i in reference:
        index = bisect.bisect_left(candidates, a_i - gamma)
        if index < len(candidates) and candidates[index] <= a_i + gamma:
            n_hit += 1
    return n_hit, _ratio(n_hit, len(reference))


def oracle_max_matching(a: Boundaries, b: Boundaries, tolerance: ToleranceLike) -> int:
    """Maximum bipartite matching on {(a, b) : |a - b| <= gamma} via augmenting paths."""
    gamma = _gamma(tolerance)
    left, right = _frames(a), _frames(b)
    if len(left) > ORACLE_MAX_SIZE or len(right) > ORACLE_MAX_SIZE:
        raise InputValidationError(
            f"oracle matching is limited to {ORACLE_MAX_SIZE} boundaries per side",
            sizes=(len(left), len(right)),
        )
    if not left or not right:
        return 0

    distance = np.abs(np.subtract.outer(np.asarray(left), np.asarray(right)))
    graph = csr_matrix((distance <= gamma).astype(np.int8))
    if graph.nnz == 0:
        return 0
    matching = maximum_bipartite_matching(graph, perm_type="column")
    return int(np.count_nonzero(matching >= 0))


def f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def r_value(precision: float, recall: float) -> float:
    """
    R-value from hit rate HR = recall and over-segmentation OS = recall / precision - 1.

    r1 = sqrt((1 - HR)^2 + OS^2), r2 = (-OS + HR - 1) / sqrt(2), R = 1 - (|r1| + |r2|) / 2.
    """
    if precision == 0:
        if recall == 0:
            return 0.0
        raise InputValidationError("R-value is undefined for zero precision with non-zero recall",
                                   precision=precision, recall=recall)
    over_segmentation = recall / precision - 1.0
    r1 = math.sqrt((1.0 - recall) ** 2 + over_segmentation ** 2)
    r2 = (-over_segmentation + recall - 1.0) / math.sqrt(2.0)
    return 1.0 - (abs(r1) + abs(r2)) / 2.0


HIT_COUNTERS = {
    "conventional": conventional_hit_ratio,
    "proposed": proposed_hit_ratio,
}


def _score_from_ratios(precision: float, recall: float) -> Tuple[float, float]:
    # zero precision only occurs with an empty reference and a non-empty prediction
    return f1(precision, recall), (r_value(precision, recall) if precision > 0 else 0.0)


def score_pair(
    truth: BoundarySequence,
    pred: BoundarySequence,
    tolerance: ToleranceLike,
    scheme: Scheme = "proposed",
) -> PairScore:
    """Recall counts truth against pred; precision swaps the arguments."""
    if truth.total_frames != pred.total_frames:
        raise InputValidationError(
            "truth and prediction cover different frame counts",
            truth_frames=truth.total_frames,
            pred_frames=pred.total_frames,
        )
    counter = HIT_COUNTERS[scheme]
    n_hit_recall, recall = counter(truth, pred, tolerance)
    n_hit_precision, precision = counter(pred, truth, tolerance)
    f_score, r_score = _score_from_ratios(precision, recall)
    return PairScore(
        scheme=scheme,
        precision=precision,
        recall=recall,
        f1=f_score,
        r_value=r_score,
        n_hit_precision=n_hit_precision,
        n_hit_recall=n_hit_recall,
        n_ref=len(truth.frames),
        n_pred=len(pred.frames),
    )


def aggregate_scores(scores: Sequence[PairScore], aggregation: Aggregation = "pooled") -> CorpusScore:
    """Reduce per-utterance scores in the given order."""
    if not scores:
        raise InputValidationError("cannot aggregate an empty set of utterances")
    schemes = {score.scheme for score in scores}
    if len(schemes) != 1:
        raise InputValidationError("cannot aggregate scores of different schemes", schemes=sorted(schemes))

    n_hit_precision = sum(score.n_hit_precision for score in scores)
    n_hit_recall = sum(score.n_hit_recall for score in scores)
    n_ref = sum(score.n_ref for score in scores)
    n_pred = sum(score.n_pred for score in scores)
    if aggregation == "pooled":
        precision = _ratio(n_hit_precision, n_pred)
        recall = _ratio(n_hit_recall, n_ref)
    elif aggregation == "macro":
        precision = math.fsum(score.precision for score in scores) / len(scores)
        recall = math.fsum(score.recall for score in scores) / len(scores)
    else:
        raise InputValidationError(f"unknown aggregation {aggregation!r}", aggregation=aggregation)

    f_score, r_score = _score_from_ratios(precision, recall)
    return CorpusScore(
        scheme=scores[0].scheme,
        aggregation=aggregation,
        precision=precision,
        recall=recall,
        f1=f_score,
        r_value=r_score,
        n_hit_precision=n_hit_precision,
        n_hit_recall=n_hit_recall,
        n_ref=n_ref,
        n_pred=n_pred,
        n_utterances=len(scores),
    )


def score_corpus(
    pairs: Iterable[Tuple[BoundarySequence, BoundarySequence]],
    tolerance: ToleranceLike,
    scheme: Scheme = "proposed",
    aggregation: Aggregation = "pooled",
) -> CorpusScore:
    scores = [score_pair(truth, pred, tolerance, scheme) for truth, pred in pairs]
    return aggregate_scores(scores, aggregation)


def duplicate_rate(pred: Boundaries, tolerance: ToleranceLike) -> float:
    """Fraction of predicted boundaries that have another prediction within gamma."""
    gamma = _gamma(tolerance)
    frames = _frames(pred)
    if not frames:
        return 0.0
    crowded = 0
    for index, frame in enumerate(frames):
        before = index > 0 and frame - frames[index - 1] <= gamma
        after = index + 1 < len(frames) and frames[index + 1] - frame <= gamma
        crowded += int(before or after)
    return crowded / len(frames)
