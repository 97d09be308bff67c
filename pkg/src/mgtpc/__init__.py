"""Learned image compression codec: re-parameterizable multi-branch
convolutions, gated dilated-window attention, hyperprior entropy model,
bit-exact range coding, and RD metrics."""

from .config import PRESETS, CodecConfig, preset
from .errors import ContractViolation, DecodeError, MgtpcError, WeightFileError

__version__ = "0.1.0"

__all__ = [
    "PRESETS", "CodecConfig", "preset",
    "MgtpcError", "ContractViolation", "DecodeError", "WeightFileError",
    "__version__",
]
