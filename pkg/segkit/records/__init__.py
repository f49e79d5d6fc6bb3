from segkit.records.base import RecordFileBase
from segkit.records.history import history_records
from segkit.records.metrics import corpus_metric_records, threshold_curve_records, utterance_metric_records
from segkit.records.manifest import manifest_records

__all__ = [
    "RecordFileBase",
    "corpus_metric_records",
    "history_records",
    "manifest_records",
    "threshold_curve_records",
    "utterance_metric_records",
]
