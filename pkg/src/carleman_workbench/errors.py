"""Exception and warning types shared across the package."""

from __future__ import annotations


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class BlowUpError(RuntimeError):
    """A time march left the physically admissible region.

    ``site`` holds lattice coordinates when the failure is local, ``step`` the
    time-step index when known.
    """

    def __init__(self, message: str, *, site: tuple[int, int] | None = None, step: int | None = None):
        super().__init__(message)
        self.site = site
        self.step = step


class SizingError(ValueError):
    """A register or grid size is not representable in the requested layout."""


class MemoryBudgetError(SizingError):
    def __init__(self, required_bytes: int, budget_bytes: int):
        super().__init__(
            f"Carleman matrix needs ~{required_bytes} bytes, budget is {budget_bytes} bytes"
        )
        self.required_bytes = required_bytes
        self.budget_bytes = budget_bytes


class ConfigError(ValueError):
    """Malformed key=value configuration. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line


class WindowLeakageWarning(RuntimeWarning):
    """Bilocal Carleman variables left the separation window."""
