"""On-disk formats: trajectory datasets and training checkpoints."""

from .checkpoint import (
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    load_partial_state,
    save_checkpoint,
)
from .dataset_file import decode_dataset, encode_dataset, read_dataset, write_dataset
from .errors import ChecksumError, PersistError, TruncatedError, VersionError

__all__ = [
    "ChecksumError",
    "PersistError",
    "TruncatedError",
    "VersionError",
    "decode_checkpoint",
    "decode_dataset",
    "encode_checkpoint",
    "encode_dataset",
    "load_checkpoint",
    "load_partial_state",
    "read_dataset",
    "save_checkpoint",
    "write_dataset",
]
