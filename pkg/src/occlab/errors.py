"""Exception types shared across the package."""


class OcclabError(Exception):
    """Base class for every error raised by this package."""


class StructuralError(OcclabError):
    """Malformed input: unknown references, schema violations, bad files."""


class NotAbsorbingError(OcclabError):
    """An operation required an absorbing model but the model admits a
    policy that avoids the absorbing set forever.

    ``witness`` carries the offending end component (state set plus the
    per-state actions whose transition mass stays inside it) when known.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class InfeasibleError(OcclabError):
    """The requested performance vector is not achievable."""


class CapExceededError(OcclabError):
    """An enumeration or iteration guard was hit before completion."""


class NumericError(OcclabError):
    """Numerical failure: singular system, residual out of tolerance,
    or an iteration that did not converge."""
