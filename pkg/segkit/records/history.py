from segkit.records.base import RecordFileBase
from segkit.schemas.records import HistoryRecord

history_records = RecordFileBase(HistoryRecord, "history.jsonl")
