"""Exception types shared across the package."""

from __future__ import annotations


class StructureError(ValueError):
    """A malformed space or specification (not an axiom violation)."""


class SizeGuardError(RuntimeError):
    """A brute-force or materializing operation would exceed its size limit."""

    def __init__(self, what: str, size: int, limit: int):
        super().__init__(f"{what}: size {size} exceeds limit {limit}")
        self.size = size
        self.limit = limit


class EmbeddingError(ValueError):
    """No embedding could be built with the given target parameters."""

    def __init__(self, message: str, level: int | None = None, required: int | None = None):
        super().__init__(message)
        self.level = level
        self.required = required


class TruncationError(EmbeddingError):
    """The target truncation is too small; ``requirements`` says how large it must be."""

    def __init__(self, message: str, requirements: dict):
        super().__init__(message)
        self.requirements = dict(requirements)
