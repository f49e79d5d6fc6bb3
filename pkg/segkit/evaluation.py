"""Scores predictions under several schemes and checks that the schemes agree in order."""
import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple, Union

from segkit.errors import SegkitError
from segkit.metrics import aggregate_scores, duplicate_rate, score_pair
from segkit.schemas.boundary import BoundarySequence
from segkit.schemas.metrics import SCHEMES, Aggregation, CorpusScore, PairScore, Scheme, Tolerance
from segkit.schemas.records import UtteranceMetricRecord

logger = logging.getLogger(__name__)

DOMINANCE_SLACK = 1e-12
DOMINATED_FIELDS = ("precision", "recall", "f1")


class DominanceError(SegkitError):
    """A proposed-scheme score exceeded its conventional counterpart."""


@dataclass(frozen=True)
class EvaluationResult:
    utterances: Tuple[UtteranceMetricRecord, ...]
    corpus: Tuple[CorpusScore, ...]
    duplicate_rate: float
    r_value_dominance_violations: int

    def score(self, scheme: str) -> CorpusScore:
        for score in self.corpus:
            if score.scheme == scheme:
                return score
        raise KeyError(scheme)


def r_value_dominated(conventional: PairScore, proposed: PairScore) -> bool:
    """
    Check conventional >= proposed for precision, recall and F1 (raises otherwise) and
    report whether the R-value follows the same order; it need not.
    """
    for name in DOMINATED_FIELDS:
        if getattr(proposed, name) > getattr(conventional, name) + DOMINANCE_SLACK:
            raise DominanceError(
                f"proposed {name} {getattr(proposed, name):.6f} exceeds conventional "
                f"{getattr(conventional, name):.6f}"
            )
    return proposed.r_value <= conventional.r_value + DOMINANCE_SLACK


def evaluate_predictions(
    utterance_ids: Sequence[str],
    truths: Sequence[BoundarySequence],
    predictions: Sequence[BoundarySequence],
    tolerance: Union[Tolerance, int],
    schemes: Sequence[Scheme] = SCHEMES,
    aggregation: Aggregation = "pooled",
    split: str = "test",
    threshold: float = 0.5,
) -> EvaluationResult:
    """Per-utterance records in input order plus corpus scores per scheme."""
    if not (len(utterance_ids) == len(truths) == len(predictions)):
        raise ValueError("utterance ids, truths and predictions must have the same length")
    gamma = tolerance.gamma_frames if isinstance(tolerance, Tolerance) else int(tolerance)

    per_scheme: Dict[str, List[PairScore]] = {scheme: [] for scheme in schemes}
    records = []
    violations = 0
    predicted = crowded = 0
    for utterance_id, truth, pred in zip(utterance_ids, truths, predictions):
        scores = tuple(score_pair(truth, pred, gamma, scheme) for scheme in schemes)
        for score in scores:
            per_scheme[score.scheme].append(score)
        if "conventional" in per_scheme and "proposed" in per_scheme:
            by_name = {score.scheme: score for score in scores}
            try:
                if not r_value_dominated(by_name["conventional"], by_name["proposed"]):
                    violations += 1
            except DominanceError as exc:
                raise DominanceError(f"{utterance_id}: {exc}") from exc
        rate = duplicate_rate(pred, gamma)
        predicted += len(pred)
        crowded += round(rate * len(pred))
        records.append(UtteranceMetricRecord(
            utterance_id=utterance_id,
            split=split,
            threshold=threshold,
            gamma_frames=gamma,
            duplicate_rate=rate,
            scores=scores,
        ))

    if violations:
        logger.info("R-value ordering differs between schemes on %d utterance(s)", violations)
    corpus = tuple(aggregate_scores(per_scheme[scheme], aggregation) for scheme in schemes)
    return EvaluationResult(
        utterances=tuple(records),
        corpus=corpus,
        duplicate_rate=crowded / predicted if predicted else 0.0,
        r_value_dominance_violations=violations,
    )
