"""Exception hierarchy shared across the package."""


class MFPredictError(Exception):
    """Base class for all package errors."""


class IngestError(MFPredictError):
    """Malformed input data (carries the offending line number when known)."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InsufficientDataError(MFPredictError):
    """Too few observations for the requested operation."""


class DegenerateWindowError(MFPredictError):
    """A detrended box has zero fluctuation while non-positive moments are requested."""

    def __init__(self, scale: int, message: str | None = None):
        self.scale = scale
        super().__init__(message or f"zero box fluctuation at scale s={scale} with q <= 0 in grid")


class DegenerateSpectrumError(MFPredictError):
    """Spectrum has zero width, so its characteristics are undefined."""


class DegenerateInputError(MFPredictError):
    """Zero variance or collinear regressors."""


class ConfigError(MFPredictError):
    """Invalid pipeline configuration."""
