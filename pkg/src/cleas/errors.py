"""Exception types shared across the package."""

from __future__ import annotations


class ConfigError(ValueError):
    """Inconsistent shapes, layouts, or settings."""


class NumericError(ArithmeticError):
    """A loss or activation became non-finite."""

    def __init__(self, message: str, batch_index: int | None = None):
        super().__init__(message)
        self.batch_index = batch_index


class InvariantError(RuntimeError):
    """An internal bookkeeping invariant was violated."""


class ParseError(ValueError):
    """Malformed binary input; ``offset`` is the byte position of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class SearchError(RuntimeError):
    """Every candidate of a task failed; ``report`` holds what was logged."""

    def __init__(self, message: str, report: dict | None = None):
        super().__init__(message)
        self.report = report or {}
