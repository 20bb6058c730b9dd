"""Shared exception types."""

from __future__ import annotations


class InsufficientSourceError(RuntimeError):
    """An extraction exhausted its search space.

    ``required_estimate`` is a crude upper-bound estimate (an iterated
    exponential, capped at 10**9) of the source size at which the standard
    pigeonhole/partition argument would be guaranteed to succeed.  It is
    bookkeeping for error reports, not a sharp threshold.
    """

    def __init__(self, message: str, required_estimate: int | None = None):
        super().__init__(message)
        self.required_estimate = required_estimate


class NotIndiscernibleError(RuntimeError):
    """A source map failed an indiscernibility precondition."""


class CapExceededError(RuntimeError):
    """A configurable enumeration cap (universe size, selection count,
    candidate count) would be exceeded."""
