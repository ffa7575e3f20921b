"""
Exception hierarchy for needlab.

Object-level outcomes (divergence, blackholes, unbound variables) are result
values, not exceptions. These classes cover malformed input and interpreter
bugs.
"""

from typing import Optional


class NeedlabError(Exception):
    """Base class for every error raised by needlab."""


class ParseError(NeedlabError):
    """Raised when program text does not match the grammar."""

    def __init__(self, message: str, position: Optional[int] = None):
        self.message = message
        self.position = position
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"{message}{where}")


class GeneralApplicationError(ParseError):
    """Raised when an application argument is not a variable."""


class HeapFormatError(NeedlabError):
    """Raised when a heap or environment file cannot be read."""


class ScopeError(NeedlabError):
    """Raised when binder names overlap where distinctness is required."""


class RankError(NeedlabError):
    """Raised for rank mismatches or ranks outside the supported range."""


class MonotonicityError(NeedlabError):
    """Raised when a function table is not monotone (an interpreter bug)."""


class FixpointError(NeedlabError):
    """Raised when Kleene iteration exceeds its cap (non-monotone functional)."""
