"""Carleman-linearized lattice Boltzmann workbench.

Reference D2Q9 solver, truncated Carleman lifting of the LB map, a generic
quadratic-ODE Carleman builder, a statevector emulator for the streaming
circuits and closed-form resource estimates.
"""

from .errors import (
    BlowUpError,
    ConfigError,
    DomainError,
    MemoryBudgetError,
    SizingError,
    WindowLeakageWarning,
)

__version__ = "0.1.0"

__all__ = [
    "BlowUpError",
    "ConfigError",
    "DomainError",
    "MemoryBudgetError",
    "SizingError",
    "WindowLeakageWarning",
]
