"""Exception types shared across the package.

The CLI maps these onto exit codes: ValidationError -> 2, PhysicsError
subclasses -> 3, OSError -> 4.
"""
from __future__ import annotations


class DopplerlineError(Exception):
    """Base class for all package errors."""


class ValidationError(DopplerlineError, ValueError):
    """A spec object or configuration value violates its invariants."""


class PhysicsError(DopplerlineError):
    """The requested run is physically inadmissible or aborted mid-flight."""


class CriticalCurrentExceeded(PhysicsError):
    """Local current reached or passed the critical current.

    Carries ``step`` (solver step index) when raised by the solver, -1 when
    raised at synthesis or model-evaluation time.
    """

    def __init__(self, message: str, step: int = -1):
        super().__init__(message)
        self.step = step


class SingularInterface(PhysicsError):
    """Doppler ratio requested for a front co-moving with the transmitted wave."""


class CflViolation(ValidationError):
    """Solver time step exceeds the stability limit dx*sqrt(l0*c)."""


class NonFiniteField(PhysicsError):
    """Solver produced NaN/Inf field values (carries ``step``)."""

    def __init__(self, message: str, step: int = -1):
        super().__init__(message)
        self.step = step


class EmptyGate(DopplerlineError):
    """Magnitude gate left no samples to unwrap phase over."""


class InsufficientSupport(DopplerlineError):
    """Too few points above threshold to fit (needs >= 5)."""


class FitDiverged(DopplerlineError):
    """Fit produced a vertex/solution outside the admissible domain."""


class SignError(DopplerlineError):
    """Fitted leading coefficient has the wrong sign for the model."""


class AlignmentFailed(DopplerlineError):
    """Envelope cross-correlation alignment did not produce a usable lag."""
