"""Binary trajectory-dataset file.

Layout, all integers little-endian:

  8 bytes   magic "DPOTDS1\\0"
  7 x u32   version (=1), N, T, H, W, C, dtype code (1 = float32)
  payload   N*T*H*W*C float32, C-order [n, t, h, w, c]
  masks     N*H*W uint8
  u64       length of the JSON metadata that follows
  JSON      metadata, UTF-8, canonical key order
  u32       CRC32 of every preceding byte

Writes go to a temporary file in the target directory followed by an atomic
rename, so readers never observe a half-written file.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
import zlib
from typing import Tuple

import numpy as np

from ..solvers.trajectory import TrajectoryDataset
from .errors import ChecksumError, PersistError, TruncatedError, VersionError

MAGIC = b"DPOTDS1\x00"
VERSION = 1
DTYPE_F32 = 1
HEADER = struct.Struct("<7I")


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"metadata value of type {type(obj).__name__} is not serializable")


def encode_dataset(dataset: TrajectoryDataset) -> bytes:
    """Serialize to the exact byte layout (deterministic for equal inputs)."""
    N, T, H, W, C = dataset.values.shape
    meta = json.dumps(
        dataset.metadata, sort_keys=True, separators=(",", ":"), default=_json_default
    ).encode("utf-8")
    parts = [
        MAGIC,
        HEADER.pack(VERSION, N, T, H, W, C, DTYPE_F32),
        np.ascontiguousarray(dataset.values, dtype="<f4").tobytes(),
        np.ascontiguousarray(dataset.masks, dtype=np.uint8).tobytes(),
        struct.pack("<Q", len(meta)),
        meta,
    ]
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def write_dataset(path: str, dataset: TrajectoryDataset) -> None:
    """Write atomically: temp file in the same directory, then rename."""
    data = encode_dataset(dataset)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _take(buf: bytes, offset: int, n: int, what: str) -> Tuple[bytes, int]:
    if offset + n > len(buf):
        raise TruncatedError(
            f"file ends inside {what}: need {offset + n} bytes, have {len(buf)}"
        )
    return buf[offset : offset + n], offset + n


def decode_dataset(buf: bytes) -> TrajectoryDataset:
    chunk, off = _take(buf, 0, len(MAGIC), "magic")
    if chunk != MAGIC:
        raise PersistError(f"bad magic {chunk!r}; not a dataset file")
    chunk, off = _take(buf, off, HEADER.size, "header")
    version, N, T, H, W, C, dtype = HEADER.unpack(chunk)
    if version != VERSION:
        raise VersionError(f"unknown dataset format version {version}")
    if dtype != DTYPE_F32:
        raise PersistError(f"unknown dtype code {dtype}")
    n_payload = N * T * H * W * C * 4
    payload, off = _take(buf, off, n_payload, "payload")
    masks_raw, off = _take(buf, off, N * H * W, "masks")
    chunk, off = _take(buf, off, 8, "metadata length")
    (meta_len,) = struct.unpack("<Q", chunk)
    meta_raw, off = _take(buf, off, meta_len, "metadata")
    crc_raw, off = _take(buf, off, 4, "checksum")
    if off != len(buf):
        raise PersistError(f"{len(buf) - off} trailing bytes after checksum")
    (crc,) = struct.unpack("<I", crc_raw)
    actual = zlib.crc32(buf[: off - 4])
    if crc != actual:
        raise ChecksumError(f"stored CRC {crc:#010x} != computed {actual:#010x}")
    values = np.frombuffer(payload, dtype="<f4").reshape(N, T, H, W, C).copy()
    masks = np.frombuffer(masks_raw, dtype=np.uint8).reshape(N, H, W).copy()
    metadata = json.loads(meta_raw.decode("utf-8"))
    return TrajectoryDataset(values=values, masks=masks, metadata=metadata)


def read_dataset(path: str) -> TrajectoryDataset:
    with open(path, "rb") as f:
        return decode_dataset(f.read())
