"""Exception types shared across the package."""

__all__ = ["DomainError", "MetricError", "TrainingError", "BundleFormatError"]


class DomainError(ValueError):
    """An input lies outside the mathematical domain of an operation."""


class MetricError(ValueError):
    """A metric is undefined for the given inputs (e.g. zero rank variance)."""


class TrainingError(ValueError):
    """A model cannot be trained or queried as requested."""


class BundleFormatError(ValueError):
    """An interchange file is malformed or fails validation."""
