"""Exception types shared across the solvers and the harness."""
from __future__ import annotations


class QnlabError(Exception):
    """Base class for all package-specific failures."""


class NonZeroMean(QnlabError, ValueError):
    """Field handed to a zero-mean-only operation has a non-negligible mean."""


class NotAProbabilityDensity(QnlabError, ValueError):
    """Density is negative somewhere or does not integrate to one."""


class NewtonDiverged(QnlabError, RuntimeError):
    """Damped Newton iteration hit its cap (or exhausted backtracking)."""


class PotentialSolveFailed(QnlabError, RuntimeError):
    """Self-consistent potential solve failed inside a time step."""


class StepTooLarge(QnlabError, ValueError):
    """Time step violates the phase-sampling guard."""


class BlowupGuardTripped(QnlabError, RuntimeError):
    """Velocity gradient exceeded the smooth-regime guard during a run."""


class NonpositiveReference(QnlabError, ValueError):
    """Reference density in a relative entropy must be strictly positive."""


class NotPositive(QnlabError, ValueError):
    """Constructed amplitude-squared lost positivity (scale parameter too large)."""


class ConfigError(QnlabError, ValueError):
    """Experiment configuration is missing, malformed, or inconsistent.

    Carries the offending file path when the file itself is the problem, so
    callers can report it without parsing the message.
    """

    def __init__(self, message: str, path: str | None = None):
        super().__init__(message)
        self.path = path
