"""Multifractal spectra of intraday returns and their use as return predictors."""

from .exceptions import (
    ConfigError,
    DegenerateInputError,
    DegenerateSpectrumError,
    DegenerateWindowError,
    IngestError,
    InsufficientDataError,
    MFPredictError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DegenerateInputError",
    "DegenerateSpectrumError",
    "DegenerateWindowError",
    "IngestError",
    "InsufficientDataError",
    "MFPredictError",
]
