import os
from pathlib import Path
from typing import Callable, Generic, Iterable, List, Type, TypeVar, Union

from pydantic import BaseModel, ValidationError

from segkit.errors import RecordFormatError

SchemaType = TypeVar("SchemaType", bound=BaseModel)

PathLike = Union[str, Path]


def atomic_write_bytes(path: PathLike, payload: bytes) -> None:
    """Write through a sibling temp file so readers never see a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    scratch = path.with_name(path.name + ".tmp")
    scratch.write_bytes(payload)
    os.replace(scratch, path)


class RecordFileBase(Generic[SchemaType]):
    """
    Base class for line-delimited record files.

    Every line is one ``SchemaType`` serialized with ``model_dump_json``; the schema's
    ``format`` field versions the file. Subclasses only pick the schema and the
    default file name.
    """

    def __init__(self, schema: Type[SchemaType], filename: str):
        self.schema = schema
        self.filename = filename

    def path(self, directory: PathLike) -> Path:
        return Path(directory) / self.filename

    def encode(self, record: SchemaType) -> str:
        return record.model_dump_json()

    def decode(self, line: str, *, path: PathLike, line_number: int) -> SchemaType:
        try:
            return self.schema.model_validate_json(line)
        except ValidationError as exc:
            raise RecordFormatError(
                f"{path}:{line_number}: not a valid {self.schema.__name__} record ({exc.error_count()} errors)",
                path=str(path),
                line=line_number,
            ) from exc

    def write(self, path: PathLike, records: Iterable[SchemaType]) -> Path:
        """Replace the file with ``records``."""
        text = "".join(self.encode(record) + "\n" for record in records)
        atomic_write_bytes(path, text.encode("utf-8"))
        return Path(path)

    def append(self, path: PathLike, record: SchemaType) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("a", encoding="utf-8") as handle:
            handle.write(self.encode(record) + "\n")

    def read(self, path: PathLike) -> List[SchemaType]:
        path = Path(path)
        if not path.is_file():
            raise RecordFormatError(f"record file {path} does not exist", path=str(path))
        records = []
        for line_number, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
            if line.strip():
                records.append(self.decode(line, path=path, line_number=line_number))
        return records

    def keep(self, path: PathLike, predicate: Callable[[SchemaType], bool]) -> List[SchemaType]:
        """Rewrite the file with only the records matching ``predicate``."""
        path = Path(path)
        kept = [record for record in self.read(path) if predicate(record)] if path.is_file() else []
        self.write(path, kept)
        return kept
