"""Exception types shared across the package."""


class CavityProbeError(Exception):
    """Base class for all package errors."""


class LeakageError(CavityProbeError):
    """State factory refused: truncated tail weight above tolerance."""

    def __init__(self, message, tail_weight=None):
        super().__init__(message)
        self.tail_weight = tail_weight


class TruncationEdgeError(CavityProbeError):
    """Signal generation refused: state has weight at the truncation edge."""


class DictionaryError(CavityProbeError):
    """Frequency dictionary is empty, non-positive, or degenerate."""


class ConvergenceError(CavityProbeError):
    """Damping extrapolation did not converge.

    Carries the per-width values so the caller can inspect the family.
    """

    def __init__(self, message, widths=None, values=None, diagnostic=None):
        super().__init__(message)
        self.widths = widths
        self.values = values
        self.diagnostic = diagnostic


class CalibrationError(CavityProbeError):
    """Calibration constants are unusable.

    Raised when the two-photon fit fails its dispersion gate, or when a
    reconstructed quadrature variance comes out negative (no physical state
    can produce that, so the constants are wrong for the input).
    """

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record


class ProvenanceError(CavityProbeError):
    """Signal metadata does not match the requested reconstruction."""


class ConfigError(CavityProbeError):
    """Run configuration is malformed; message names the offending key."""
