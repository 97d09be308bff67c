"""Exception hierarchy shared by the whole package."""


class MgtpcError(Exception):
    """Base class for all package errors."""


class ContractViolation(MgtpcError, ValueError):
    """An argument violated a documented precondition (shape, range, flag)."""


class DecodeError(MgtpcError):
    """A bitstream could not be decoded (bad magic, truncation, version)."""


class WeightFileError(MgtpcError):
    """A weight container failed validation (magic, CRC, shape, config id)."""
