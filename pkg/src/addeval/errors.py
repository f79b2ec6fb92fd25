"""Exception types shared across the package.

Everything derives from :class:`AddevalError` so callers can catch the
package's failures with one except clause.  Errors that are really malformed
input also subclass :class:`ValueError` so that generic validation code keeps
working.
"""

from __future__ import annotations


class AddevalError(Exception):
    """Base class for all errors raised by this package."""


class DomainViolation(AddevalError, ValueError):
    """An operator was applied outside its mathematical domain.

    Carries the operator name and the index of the first offending sample so
    failures can be traced back to a concrete row.
    """

    def __init__(self, op: str, sample_index: int, detail: str = ""):
        self.op = op
        self.sample_index = sample_index
        msg = f"operator '{op}' applied outside its domain at sample {sample_index}"
        if detail:
            msg = f"{msg}: {detail}"
        super().__init__(msg)


class ParseError(AddevalError, ValueError):
    """Expression text could not be parsed; carries the character position."""

    def __init__(self, position: int, message: str):
        self.position = position
        super().__init__(f"parse error at position {position}: {message}")


class ModelFormatError(AddevalError, ValueError):
    """A model or contribution file violates the documented grammar."""


class GenerationExhausted(AddevalError):
    """Model generation hit max_retries without producing a valid candidate."""


class NonFiniteOutput(AddevalError, ValueError):
    """A model produced NaN/inf contributions where finite values are required."""


class EmptyBackground(AddevalError, ValueError):
    """An explainer was given an empty background dataset."""


class SingularFit(AddevalError):
    """A weighted least-squares system was rank-deficient beyond repair."""


class BudgetExceeded(AddevalError):
    """A combinatorial guard tripped (too many features for exact enumeration)."""


class ExplainTimeout(AddevalError):
    """An explanation attempt exceeded its wall-clock budget."""


class ExplainFailure(AddevalError):
    """An explainer could not produce an explanation for a model."""


class SignatureMismatch(AddevalError, ValueError):
    """Signatures in a matching/explanation disagree with the model or data."""


class LengthMismatch(AddevalError, ValueError):
    """Two vectors that must share a length do not."""


class DegenerateInput(AddevalError, ValueError):
    """A statistic is undefined for the given input (e.g. constant vector)."""
