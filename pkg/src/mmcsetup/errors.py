"""Exception types shared across the solvers.

Everything derives from QueueModelError so callers can catch model-level
failures with one except clause while letting genuine bugs surface.
"""

from __future__ import annotations


class QueueModelError(Exception):
    """Base class for all model and solver errors."""

    #: short machine-readable tag used by the CLI error JSON
    tag = "QueueModelError"


class InvalidParameterError(QueueModelError):
    """A rate is nonpositive, the server count is < 1, or similar."""

    tag = "InvalidParameter"


class UnstableError(QueueModelError):
    """Offered load rho = lambda / (c mu) is >= 1; no stationary regime."""

    tag = "Unstable"

    def __init__(self, rho: float, message: str | None = None):
        self.rho = rho
        super().__init__(message or f"unstable: rho = {rho:.6g} >= 1")


class InvalidStateError(QueueModelError):
    """State (i, j) lies outside the reachable region 0 <= i <= c, j >= i."""

    tag = "InvalidState"


class InvalidConfigError(QueueModelError):
    """A config file, sweep grid or simulation setup is malformed."""

    tag = "InvalidConfig"


class DegeneratePolesError(QueueModelError):
    """Two tail decay roots coincide, so the partial-fraction tail
    representation does not exist.

    The repeated-root variant of the closed form is deliberately not
    implemented; perturbing alpha by about 1e-7 relative separates the
    roots without visibly changing the distribution.
    """

    tag = "DegeneratePoles"

    def __init__(self, a: int, b: int, za: float, zb: float):
        self.a = a
        self.b = b
        super().__init__(
            f"tail roots {a} and {b} coincide ({za:.12g} vs {zb:.12g}); "
            "the repeated-root closed form is not implemented. "
            "Perturbing alpha by ~1e-7 relative separates the roots."
        )


class DegenerateConditionError(QueueModelError):
    """A conditional distribution was requested on an event of zero mass."""

    tag = "DegenerateCondition"


class TruncationInsufficientError(QueueModelError):
    """The truncated state space leaves more probability mass in its last
    levels than the caller's tolerance allows."""

    tag = "TruncationInsufficient"


class NoCrossingError(QueueModelError):
    """Cost curves do not cross inside the bracketing interval."""

    tag = "NoCrossing"


class InternalInconsistencyError(QueueModelError):
    """An internal certificate failed (a quantity that is provably positive
    came out nonpositive, two exact identities disagreed, a matrix that is
    provably nonsingular failed to factor).  Indicates a bug, not bad input."""

    tag = "InternalInconsistency"
