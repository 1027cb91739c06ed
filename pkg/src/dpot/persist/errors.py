"""Errors shared by the on-disk formats."""


class PersistError(Exception):
    """Malformed file (bad magic, impossible layout, bad field)."""


class TruncatedError(PersistError):
    """File ends before the layout promised by its header."""


class ChecksumError(PersistError):
    """Trailing CRC32 does not match the file contents."""


class VersionError(PersistError):
    """Format version this reader does not understand."""
