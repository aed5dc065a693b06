"""Exception types shared across the package."""


class AnnLogicError(Exception):
    """Base class for all package errors."""


class DomainError(AnnLogicError, ValueError):
    """An input value lies outside its admissible domain."""


class ConfigurationError(AnnLogicError, ValueError):
    """Invalid or inconsistent configuration."""


class StructuralError(AnnLogicError, ValueError):
    """Model or tensor dimensions do not fit together."""


class DegenerateRangeError(AnnLogicError, ValueError):
    """Quantization interval collapsed to a single point."""


class UncoveredCellError(AnnLogicError, KeyError):
    """A partition cell is not part of the bit tensor."""


class IngestionError(AnnLogicError, ValueError):
    """Input CSV could not be turned into a labeled dataset."""
