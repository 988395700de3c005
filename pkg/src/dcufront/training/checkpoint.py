"""
Versioned binary checkpoints.

Layout (all integers little-endian u32):

    magic  b"DCUFCKPT"
    version
    metadata length, metadata (UTF-8 JSON, sorted keys)
    record count, then per record:
        name length, name (UTF-8), ndim, dims..., data ('<f8', row-major)
    (a second record block holds optimizer moments)
    sha256 of everything above
"""
import hashlib
import json
import os
import struct
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Tuple, Union

import numpy as np

from dcufront.core.errors import CheckpointError
from dcufront.core.log import get_logger
from dcufront.core.types import SystemKind

logger = get_logger(__name__)

MAGIC = b"DCUFCKPT"
FORMAT_VERSION = 1
_U32 = struct.Struct("<I")
_DIGEST_SIZE = hashlib.sha256().digest_size

PathLike = Union[str, Path]


@dataclass
class Checkpoint:
    """
    Parameters and buffers of one module, optimizer moments and run metadata.

    Metadata always carries `system`, `config_digest`, `seed` and `epoch`;
    trainers add entries such as `adam_step` and `final_l_enh`.
    """
    state: "OrderedDict[str, np.ndarray]"
    metadata: Dict[str, Any]
    moments: "OrderedDict[str, np.ndarray]" = field(default_factory=OrderedDict)

    @property
    def system(self) -> SystemKind:
        return SystemKind(self.metadata["system"])

    @property
    def epoch(self) -> int:
        return int(self.metadata.get("epoch", 0))

    def parameter_names(self):
        return list(self.state)


def _encode_records(records: Mapping[str, np.ndarray]) -> bytes:
    parts = [_U32.pack(len(records))]
    for name, value in records.items():
        array = np.ascontiguousarray(value, dtype="<f8")
        encoded = name.encode("utf-8")
        parts.append(_U32.pack(len(encoded)))
        parts.append(encoded)
        parts.append(_U32.pack(array.ndim))
        parts.extend(_U32.pack(d) for d in array.shape)
        parts.append(array.tobytes())
    return b"".join(parts)


def encode_checkpoint(checkpoint: Checkpoint) -> bytes:
    meta = json.dumps(checkpoint.metadata, sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = b"".join([
        MAGIC,
        _U32.pack(FORMAT_VERSION),
        _U32.pack(len(meta)),
        meta,
        _encode_records(checkpoint.state),
        _encode_records(checkpoint.moments),
    ])
    return body + hashlib.sha256(body).digest()


class _Reader:
    def __init__(self, payload: bytes):
        self.payload = payload
        self.offset = 0

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.payload):
            raise CheckpointError("checkpoint is truncated")
        chunk = self.payload[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def u32(self) -> int:
        return _U32.unpack(self.take(_U32.size))[0]

    def records(self) -> "OrderedDict[str, np.ndarray]":
        records: "OrderedDict[str, np.ndarray]" = OrderedDict()
        for _ in range(self.u32()):
            name = self.take(self.u32()).decode("utf-8")
            shape: Tuple[int, ...] = tuple(self.u32() for _ in range(self.u32()))
            count = int(np.prod(shape, dtype=np.int64))
            data = np.frombuffer(self.take(8 * count), dtype="<f8").astype(np.float64)
            records[name] = data.reshape(shape)
        return records


def decode_checkpoint(payload: bytes) -> Checkpoint:
    """
    Raises:
        CheckpointError: bad magic, unsupported version, digest mismatch or truncation
    """
    if len(payload) < len(MAGIC) + _DIGEST_SIZE or not payload.startswith(MAGIC):
        raise CheckpointError("not a dcufront checkpoint (bad magic)")
    body, digest = payload[:-_DIGEST_SIZE], payload[-_DIGEST_SIZE:]
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointError("checkpoint digest mismatch")
    reader = _Reader(body)
    reader.take(len(MAGIC))
    version = reader.u32()
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}, expected {FORMAT_VERSION}")
    metadata = json.loads(reader.take(reader.u32()).decode("utf-8"))
    state = reader.records()
    moments = reader.records()
    if reader.offset != len(body):
        raise CheckpointError("trailing bytes after checkpoint records")
    return Checkpoint(state=state, metadata=metadata, moments=moments)


def save_checkpoint(path: PathLike, checkpoint: Checkpoint) -> Path:
    """Write atomically: a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_bytes(encode_checkpoint(checkpoint))
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()
    logger.debug("saved checkpoint %s (%d tensors)", path, len(checkpoint.state))
    return path


def load_checkpoint(path: PathLike) -> Checkpoint:
    """
    Raises:
        CheckpointError: the file is missing or invalid
    """
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint {path} does not exist")
    return decode_checkpoint(path.read_bytes())
