"""Exception types shared across the package.

The CLI maps these onto exit codes: config/validation problems exit 2,
training failures exit 3, I/O errors exit 4.
"""


class CogwifiError(Exception):
    pass


class ConfigError(CogwifiError, ValueError):
    """Malformed scenario document or violated configuration invariant."""


class DatasetError(CogwifiError, ValueError):
    """Dataset schema mismatch, non-finite value, or broken sample invariant."""


class SimulationError(CogwifiError, RuntimeError):
    """Invalid simulation request (missing model, unknown AP, no-op handover)."""


class TrainingError(CogwifiError, RuntimeError):
    """Model training failed: divergence, non-convergence, degenerate data."""
