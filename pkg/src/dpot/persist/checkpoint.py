"""Model / training checkpoint file.

Layout, all integers little-endian:

  8 bytes   magic "DPOTCKPT"
  u64       length of the JSON manifest that follows
  JSON      manifest: format version, model config, training scalars, and
            per-array records {offset, shape, dtype} into the blob, arrays
            listed in sorted name order
  blob      the arrays, concatenated at their stated offsets
  u32       CRC32 of every preceding byte

Serialization is canonical (sorted names and manifest keys), so
save -> load -> save reproduces the file byte for byte.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
import zlib
from typing import Callable, Dict, List, Optional

import numpy as np

from .errors import ChecksumError, PersistError, TruncatedError, VersionError

MAGIC = b"DPOTCKPT"
VERSION = 1
_DTYPES = {"<f8": np.dtype("<f8")}


def encode_checkpoint(state: Dict) -> bytes:
    """Serialize {"arrays", "scalars", "config"} (the training-state layout)."""
    arrays = state["arrays"]
    records = {}
    blobs: List[bytes] = []
    offset = 0
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name], dtype="<f8")
        raw = arr.tobytes()
        records[name] = {"offset": offset, "shape": list(arr.shape), "dtype": "<f8"}
        blobs.append(raw)
        offset += len(raw)
    manifest = {
        "version": VERSION,
        "config": state.get("config"),
        "scalars": state.get("scalars", {}),
        "arrays": records,
        "blob_size": offset,
    }
    meta = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = MAGIC + struct.pack("<Q", len(meta)) + meta + b"".join(blobs)
    return body + struct.pack("<I", zlib.crc32(body))


def save_checkpoint(path: str, state: Dict) -> None:
    """Write atomically: temp file in the same directory, then rename."""
    data = encode_checkpoint(state)
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


def decode_checkpoint(buf: bytes, names: Optional[Callable[[str], bool]] = None) -> Dict:
    if len(buf) < len(MAGIC) + 8:
        raise TruncatedError(f"file of {len(buf)} bytes is shorter than any checkpoint")
    if buf[: len(MAGIC)] != MAGIC:
        raise PersistError(f"bad magic {buf[:8]!r}; not a checkpoint file")
    (meta_len,) = struct.unpack("<Q", buf[len(MAGIC) : len(MAGIC) + 8])
    meta_start = len(MAGIC) + 8
    if meta_start + meta_len + 4 > len(buf):
        raise TruncatedError("file ends inside the manifest")
    manifest = json.loads(buf[meta_start : meta_start + meta_len].decode("utf-8"))
    version = manifest.get("version")
    if version != VERSION:
        raise VersionError(f"unknown checkpoint format version {version}")
    blob_start = meta_start + meta_len
    blob_size = int(manifest["blob_size"])
    expected_len = blob_start + blob_size + 4
    if len(buf) < expected_len:
        raise TruncatedError(
            f"file has {len(buf)} bytes; manifest promises {expected_len}"
        )
    if len(buf) > expected_len:
        raise PersistError(f"{len(buf) - expected_len} trailing bytes after checksum")
    (crc,) = struct.unpack("<I", buf[-4:])
    actual = zlib.crc32(buf[:-4])
    if crc != actual:
        raise ChecksumError(f"stored CRC {crc:#010x} != computed {actual:#010x}")

    arrays: Dict[str, np.ndarray] = {}
    for name, rec in manifest["arrays"].items():
        if names is not None and not names(name):
            continue
        dtype = _DTYPES.get(rec["dtype"])
        if dtype is None:
            raise PersistError(f"array {name} has unknown dtype {rec['dtype']!r}")
        shape = tuple(int(s) for s in rec["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = blob_start + int(rec["offset"])
        end = start + count * dtype.itemsize
        if end > blob_start + blob_size:
            raise PersistError(f"array {name} extends past the blob")
        arrays[name] = (
            np.frombuffer(buf[start:end], dtype=dtype).reshape(shape).copy()
        )
    return {
        "arrays": arrays,
        "scalars": manifest.get("scalars", {}),
        "config": manifest.get("config"),
    }


def load_checkpoint(path: str, names: Optional[Callable[[str], bool]] = None) -> Dict:
    """Read a checkpoint; ``names`` optionally filters which arrays to load."""
    with open(path, "rb") as f:
        return decode_checkpoint(f.read(), names)


def load_partial_state(model, path: str, predicate: Callable[[str], bool]) -> List[str]:
    """Copy only the parameter arrays selected by ``predicate`` into
    ``model``, leaving everything else untouched. Returns the loaded names.

    Shapes must match; optimizer-state arrays (opt.* keys) never match model
    parameters and are skipped.
    """
    state = load_checkpoint(
        path, names=lambda n: not n.startswith("opt.") and predicate(n)
    )
    loaded = []
    for name, arr in sorted(state["arrays"].items()):
        if name not in model.params:
            raise KeyError(f"checkpoint array {name} is not a model parameter")
        target = model.params[name]
        if target.data.shape != arr.shape:
            raise ValueError(
                f"parameter {name} has shape {target.data.shape}, "
                f"checkpoint has {arr.shape}"
            )
        target.data = arr.copy()
        loaded.append(name)
    return loaded
