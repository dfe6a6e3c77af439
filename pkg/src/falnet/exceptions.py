"""Error types raised across the package."""


class FalnetError(ValueError):
    """Base class for all domain errors."""


class CsvFormatError(FalnetError):
    """Malformed CSV input: bad header, bad cell, or no data rows."""


class NonMonotonicTime(FalnetError):
    """Timestamps are not strictly increasing."""


class AllMissingChannel(FalnetError):
    """A channel has no observed values to interpolate from."""


class DegenerateChannel(FalnetError):
    """Min-max scaling requested on a channel with max == min."""


class InsufficientHistory(FalnetError):
    """Series too short for the requested windowing or split."""


class WindowTooSmall(FalnetError):
    """LOESS local window has fewer points than the fit needs."""


class NonRealSignal(FalnetError):
    """Spectrum lacks the conjugate symmetry of a real signal."""


class CheckpointError(FalnetError):
    """Checkpoint file is missing, truncated, or not a FALNET container."""
