"""Audio loading by magic-byte sniffing (RIFF/WAV and NIST SPHERE) and WAV writing."""
import logging
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np
import soundfile as sf

from segkit.errors import RecordFormatError

logger = logging.getLogger(__name__)

EXPECTED_SAMPLE_RATE = 16000
SPHERE_MAGIC = b"NIST_1A"
RIFF_MAGIC = b"RIFF"


def sniff_audio_format(path: Union[str, Path]) -> str:
    with open(path, "rb") as handle:
        head = handle.read(8)
    if head.startswith(RIFF_MAGIC):
        return "wav"
    if head.startswith(SPHERE_MAGIC):
        return "sphere"
    raise RecordFormatError(f"unsupported audio format in {path}", path=str(path), magic=head)


def _read_sphere_header(raw: bytes, path: Path) -> Dict[str, str]:
    lines = raw[:1024].split(b"\n")
    try:
        header_size = int(lines[1].strip())
    except (IndexError, ValueError):
        raise RecordFormatError(f"malformed SPHERE header in {path}", path=str(path))

    fields: Dict[str, str] = {"header_size": str(header_size)}
    for line in raw[:header_size].split(b"\n")[2:]:
        text = line.decode("ascii", errors="replace").strip()
        if text == "end_head":
            break
        parts = text.split(None, 2)
        if len(parts) == 3:
            fields[parts[0]] = parts[2]
    return fields


def _load_sphere(path: Path) -> tuple:
    raw = path.read_bytes()
    fields = _read_sphere_header(raw, path)
    coding = fields.get("sample_coding", "pcm")
    if not coding.startswith("pcm"):
        raise RecordFormatError(f"compressed SPHERE audio ({coding}) is not supported: {path}", path=str(path))
    if fields.get("sample_n_bytes", "2") != "2":
        raise RecordFormatError(f"only 16-bit SPHERE audio is supported: {path}", path=str(path))
    if fields.get("channel_count", "1") != "1":
        raise RecordFormatError(f"only mono audio is supported: {path}", path=str(path))

    dtype = ">i2" if fields.get("sample_byte_format", "01") == "10" else "<i2"
    header_size = int(fields["header_size"])
    samples = np.frombuffer(raw[header_size:], dtype=dtype)
    count = int(fields.get("sample_count", len(samples)))
    audio = samples[:count].astype(np.float32) / 32768.0
    return audio, int(fields.get("sample_rate", EXPECTED_SAMPLE_RATE))


def load_audio(
    path: Union[str, Path],
    start_sample: int = 0,
    end_sample: Optional[int] = None,
    expected_rate: int = EXPECTED_SAMPLE_RATE,
) -> np.ndarray:
    """
    Load mono 16-bit audio as float32 in [-1, 1).

    Inputs must already be at ``expected_rate``; resampling is left to the caller.
    """
    path = Path(path)
    kind = sniff_audio_format(path)
    if kind == "wav":
        audio, rate = sf.read(path, dtype="float32", always_2d=True)
        if audio.shape[1] != 1:
            raise RecordFormatError(f"only mono audio is supported: {path}", path=str(path))
        audio = audio[:, 0]
    else:
        audio, rate = _load_sphere(path)

    if rate != expected_rate:
        raise RecordFormatError(
            f"{path} has sample rate {rate}, expected {expected_rate}",
            path=str(path),
            sample_rate=rate,
        )
    audio = audio[start_sample:end_sample]
    if audio.size == 0:
        raise RecordFormatError(f"no audio samples in {path}[{start_sample}:{end_sample}]", path=str(path))
    return np.ascontiguousarray(audio, dtype=np.float32)


def write_wav(path: Union[str, Path], audio: np.ndarray, sample_rate: int = EXPECTED_SAMPLE_RATE) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    sf.write(str(path), np.asarray(audio, dtype=np.float32), sample_rate, subtype="PCM_16", format="WAV")
