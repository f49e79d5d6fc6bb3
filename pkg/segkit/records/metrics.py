from typing import List

from segkit.records.base import PathLike, RecordFileBase
from segkit.schemas.records import CorpusMetricRecord, ThresholdCurveRecord, UtteranceMetricRecord


class CorpusMetricRecordFile(RecordFileBase[CorpusMetricRecord]):
    def read_many(self, paths: List[PathLike]) -> List[CorpusMetricRecord]:
        """Concatenate the records of several runs, in the order given."""
        records: List[CorpusMetricRecord] = []
        for path in paths:
            records.extend(self.read(path))
        return records


utterance_metric_records = RecordFileBase(UtteranceMetricRecord, "utterances.jsonl")
corpus_metric_records = CorpusMetricRecordFile(CorpusMetricRecord, "corpus.jsonl")
threshold_curve_records = RecordFileBase(ThresholdCurveRecord, "threshold_curve.jsonl")
