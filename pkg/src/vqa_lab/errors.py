"""Exception types shared across the package.

Every error raised on purpose derives from :class:`VqaLabError` so callers
(and the command line driver) can distinguish anticipated failures from
genuine bugs.  The concrete subclasses mirror the failure categories used
throughout: malformed input text, shape/size mismatches, hard resource caps,
out-of-domain arguments, formulas applied outside their validity regime, and
numerical blow-up during optimization.
"""

from __future__ import annotations


class VqaLabError(Exception):
    """Base class for all anticipated errors raised by this package."""


class ParseError(VqaLabError, ValueError):
    """Malformed Hamiltonian text or other unparseable input."""


class DimensionError(VqaLabError, ValueError):
    """Mismatched qubit counts, parameter lengths, or vector sizes."""


class CapacityError(VqaLabError, ValueError):
    """A hard resource cap was exceeded (qubit count, parameter count)."""


class DomainError(VqaLabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class RegimeError(DomainError):
    """Inputs are outside the validity regime of an analytic formula."""


class DivergedError(VqaLabError, RuntimeError):
    """Optimization produced a non-finite loss.

    ``step`` records the first step index at which the loss was non-finite.
    """

    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"loss became non-finite at step {step}")


class ConfigError(VqaLabError, ValueError):
    """Invalid experiment configuration (unknown fields, bad values)."""
