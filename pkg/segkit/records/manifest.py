"""TSV codec for corpus manifests."""
from pathlib import Path
from typing import List

from pydantic import ValidationError

from segkit.errors import RecordFormatError
from segkit.records.base import PathLike, atomic_write_bytes
from segkit.schemas.corpus import Manifest, ManifestEntry

MANIFEST_MAGIC = "#segkit-manifest"
MANIFEST_VERSION = "v1"
MANIFEST_FIELDS = (
    "utterance_id",
    "split",
    "speaker_id",
    "audio_path",
    "annotation_path",
    "annotation_format",
    "start_sample",
    "end_sample",
)
MISSING = "-"


class ManifestFile:
    """Reads and writes ``manifest.tsv``: a header line, then one entry per line in manifest order."""

    filename = "manifest.tsv"

    def path(self, directory: PathLike) -> Path:
        return Path(directory) / self.filename

    def encode(self, manifest: Manifest) -> str:
        lines = [f"{MANIFEST_MAGIC}\t{MANIFEST_VERSION}\tseed={manifest.seed}"]
        for entry in manifest.entries:
            lines.append("\t".join((
                entry.utterance_id,
                entry.split,
                entry.speaker_id,
                str(entry.audio_path),
                str(entry.annotation_path),
                entry.annotation_format,
                str(entry.start_sample),
                MISSING if entry.end_sample is None else str(entry.end_sample),
            )))
        return "\n".join(lines) + "\n"

    def write(self, path: PathLike, manifest: Manifest) -> Path:
        atomic_write_bytes(path, self.encode(manifest).encode("utf-8"))
        return Path(path)

    def read(self, path: PathLike) -> Manifest:
        path = Path(path)
        if not path.is_file():
            raise RecordFormatError(f"manifest {path} does not exist", path=str(path))
        lines = path.read_text(encoding="utf-8").splitlines()
        header = lines[0].split("\t") if lines else []
        if len(header) != 3 or header[0] != MANIFEST_MAGIC or not header[2].startswith("seed="):
            raise RecordFormatError(f"{path} is not a segkit manifest", path=str(path), line=1)
        if header[1] != MANIFEST_VERSION:
            raise RecordFormatError(
                f"{path}: unsupported manifest version {header[1]}",
                path=str(path),
                line=1,
            )
        try:
            seed = int(header[2][len("seed="):])
        except ValueError as exc:
            raise RecordFormatError(f"{path}: bad seed in header", path=str(path), line=1) from exc

        entries: List[ManifestEntry] = []
        for line_number, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != len(MANIFEST_FIELDS):
                raise RecordFormatError(
                    f"{path}:{line_number}: expected {len(MANIFEST_FIELDS)} fields, got {len(fields)}",
                    path=str(path),
                    line=line_number,
                )
            row = dict(zip(MANIFEST_FIELDS, fields))
            if row["end_sample"] == MISSING:
                row["end_sample"] = None
            try:
                entries.append(ManifestEntry(**row))
            except ValidationError as exc:
                raise RecordFormatError(
                    f"{path}:{line_number}: invalid manifest entry ({exc.error_count()} errors)",
                    path=str(path),
                    line=line_number,
                ) from exc
        try:
            return Manifest(entries=tuple(entries), seed=seed)
        except ValidationError as exc:
            raise RecordFormatError(f"{path}: {exc.errors()[0]['msg']}", path=str(path)) from exc


manifest_records = ManifestFile()
