"""
Binary checkpoint codec.

Layout (little endian): magic ``SGKC``, u16 version, u32 meta length, UTF-8 JSON meta
with sorted keys, u32 tensor count, then per tensor: u16 name length, UTF-8 name,
u8 ndim, ndim x u32 dims, float32 data row-major. AdamW moments are stored as
``optim/<parameter>/exp_avg`` and ``optim/<parameter>/exp_avg_sq``; the step count
is ``meta["optimizer"]["step"]``.
"""
import json
import struct
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import numpy as np
import torch

from segkit.errors import RecordFormatError
from segkit.models.superseg import SuperSeg
from segkit.records.base import PathLike, atomic_write_bytes
from segkit.schemas.model import SuperSegConfig

CHECKPOINT_MAGIC = b"SGKC"
CHECKPOINT_VERSION = 1
OPTIMIZER_PREFIX = "optim/"
MOMENTS = ("exp_avg", "exp_avg_sq")

_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")
_U8 = struct.Struct("<B")


@dataclass(frozen=True)
class Checkpoint:
    meta: Dict[str, Any]
    tensors: "OrderedDict[str, np.ndarray]"

    @property
    def model_config(self) -> SuperSegConfig:
        return SuperSegConfig(**self.meta["model"])

    @property
    def epoch(self) -> int:
        return int(self.meta.get("epoch", 0))

    @property
    def has_optimizer_state(self) -> bool:
        return any(name.startswith(OPTIMIZER_PREFIX) for name in self.tensors)


def encode_checkpoint(meta: Mapping[str, Any], tensors: Mapping[str, np.ndarray]) -> bytes:
    meta_bytes = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [
        CHECKPOINT_MAGIC,
        _U16.pack(CHECKPOINT_VERSION),
        _U32.pack(len(meta_bytes)),
        meta_bytes,
        _U32.pack(len(tensors)),
    ]
    for name, values in tensors.items():
        array = np.ascontiguousarray(values, dtype="<f4")
        encoded_name = name.encode("utf-8")
        parts.append(_U16.pack(len(encoded_name)))
        parts.append(encoded_name)
        parts.append(_U8.pack(array.ndim))
        parts.extend(_U32.pack(dim) for dim in array.shape)
        parts.append(array.tobytes(order="C"))
    return b"".join(parts)


class _Reader:
    def __init__(self, payload: bytes, path: PathLike):
        self.payload = payload
        self.offset = 0
        self.path = path

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.payload):
            raise RecordFormatError(f"{self.path}: truncated checkpoint", path=str(self.path))
        chunk = self.payload[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, codec: struct.Struct) -> int:
        return codec.unpack(self.take(codec.size))[0]


def decode_checkpoint(payload: bytes, path: PathLike = "<bytes>") -> Checkpoint:
    reader = _Reader(payload, path)
    if reader.take(4) != CHECKPOINT_MAGIC:
        raise RecordFormatError(f"{path}: not a segkit checkpoint", path=str(path))
    version = reader.unpack(_U16)
    if version != CHECKPOINT_VERSION:
        raise RecordFormatError(f"{path}: unsupported checkpoint version {version}", path=str(path))
    try:
        meta = json.loads(reader.take(reader.unpack(_U32)).decode("utf-8"))
    except ValueError as exc:
        raise RecordFormatError(f"{path}: checkpoint meta is not JSON", path=str(path)) from exc

    tensors: "OrderedDict[str, np.ndarray]" = OrderedDict()
    for _ in range(reader.unpack(_U32)):
        name = reader.take(reader.unpack(_U16)).decode("utf-8")
        shape = tuple(reader.unpack(_U32) for _ in range(reader.unpack(_U8)))
        count = int(np.prod(shape, dtype=np.int64))
        values = np.frombuffer(reader.take(4 * count), dtype="<f4").reshape(shape)
        tensors[name] = values.astype(np.float32)
    if reader.offset != len(payload):
        raise RecordFormatError(f"{path}: trailing bytes after last tensor", path=str(path))
    return Checkpoint(meta=meta, tensors=tensors)


def checkpoint_tensors(model: SuperSeg, optimizer: Optional[torch.optim.Optimizer] = None) -> Dict[str, Any]:
    """Parameters (and optimizer moments) as numpy arrays plus the optimizer step."""
    tensors: "OrderedDict[str, np.ndarray]" = OrderedDict()
    for name, value in model.state_dict().items():
        tensors[name] = value.detach().cpu().numpy()
    step = 0
    if optimizer is not None:
        for name, parameter in model.named_parameters():
            state = optimizer.state.get(parameter)
            if not state:
                continue
            step = int(state["step"])
            for moment in MOMENTS:
                tensors[f"{OPTIMIZER_PREFIX}{name}/{moment}"] = state[moment].detach().cpu().numpy()
    return {"tensors": tensors, "step": step}


def save_checkpoint(
    path: PathLike,
    model: SuperSeg,
    meta: Optional[Mapping[str, Any]] = None,
    optimizer: Optional[torch.optim.Optimizer] = None,
) -> Path:
    collected = checkpoint_tensors(model, optimizer)
    full_meta = dict(meta or {})
    full_meta["model"] = model.config.model_dump(mode="json")
    if optimizer is not None:
        full_meta["optimizer"] = {"step": collected["step"]}
    atomic_write_bytes(path, encode_checkpoint(full_meta, collected["tensors"]))
    return Path(path)


def load_checkpoint(path: PathLike) -> Checkpoint:
    path = Path(path)
    if not path.is_file():
        raise RecordFormatError(f"checkpoint {path} does not exist", path=str(path))
    return decode_checkpoint(path.read_bytes(), path)


def restore_model(checkpoint: Checkpoint, device: str = "cpu") -> SuperSeg:
    model = SuperSeg(checkpoint.model_config)
    state = {
        name: torch.from_numpy(values.copy())
        for name, values in checkpoint.tensors.items()
        if not name.startswith(OPTIMIZER_PREFIX)
    }
    try:
        model.load_state_dict(state, strict=True)
    except RuntimeError as exc:
        raise RecordFormatError(f"checkpoint tensors do not match the model: {exc}") from exc
    return model.to(device)


def restore_optimizer(checkpoint: Checkpoint, model: SuperSeg, optimizer: torch.optim.Optimizer) -> None:
    step = float(checkpoint.meta.get("optimizer", {}).get("step", 0))
    for name, parameter in model.named_parameters():
        keys = [f"{OPTIMIZER_PREFIX}{name}/{moment}" for moment in MOMENTS]
        if not all(key in checkpoint.tensors for key in keys):
            continue
        optimizer.state[parameter] = {
            "step": torch.tensor(step, dtype=torch.float32),
            **{
                moment: torch.from_numpy(checkpoint.tensors[key].copy()).to(parameter.device)
                for moment, key in zip(MOMENTS, keys)
            },
        }
