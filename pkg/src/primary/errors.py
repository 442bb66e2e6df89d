"""
Exception hierarchy for SDMASK
Numeric and parsing layers raise these; orchestration layers catch and log them.
"""


class SdmaskError(Exception):
    """Base class for every error raised by SDMASK."""


class ConfigurationError(SdmaskError):
    """Invalid configuration, schema violation or inconsistent parameters."""


class ShapeMismatchError(ConfigurationError):
    """Tensor shapes or dtypes that cannot be combined."""


class AccumulationOverflowError(SdmaskError):
    """An integer accumulator left the int32 range."""


class ManifestError(SdmaskError):
    """Malformed dataset manifest."""

    def __init__(self, message, line_number=None, seq_id=None, path=None):
        parts = [message]
        if line_number is not None:
            parts.append(f"line {line_number}")
        if seq_id is not None:
            parts.append(f"seq_id {seq_id!r}")
        if path is not None:
            parts.append(f"path {path}")
        super().__init__(" | ".join(parts))
        self.line_number = line_number
        self.seq_id = seq_id
        self.path = path


class ImageFormatError(SdmaskError):
    """Image file that is not a binary PPM/PGM with maxval 255."""


class WeightsFormatError(SdmaskError):
    """Corrupt or incompatible SDNNW1 weights container."""


class TrainingDivergedError(SdmaskError):
    """Optimizer produced a non-finite loss."""


class UnknownFrameError(SdmaskError):
    """Requested frame was not retained by the run."""


class CalibrationError(SdmaskError):
    """Cost-model calibration could not be carried out."""


class OutputError(SdmaskError):
    """A report, dump or artifact file could not be written."""
