"""Exception types raised across the package."""


class SpikeceptError(Exception):
    """Base class for package errors."""


class ConfigurationError(SpikeceptError, ValueError):
    """Invalid topology, hyperparameter, or JSON configuration."""


class NumericError(SpikeceptError, FloatingPointError):
    """Simulation state became non-finite."""

    def __init__(self, what, index):
        super().__init__(f"non-finite {what} at neuron {index}")
        self.what = what
        self.index = index


class IDXFormatError(SpikeceptError, ValueError):
    """Malformed IDX file."""


class CheckpointError(SpikeceptError, ValueError):
    """Corrupt, truncated, or version-mismatched checkpoint."""
