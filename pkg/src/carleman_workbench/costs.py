"""Closed-form resource estimates for quantum CFD.

Every figure in a :class:`CostReport` carries a provenance string naming the
formula that produced it. Shot counts come from a naive model, not from
measurement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import DomainError
from .lattice import Q

CARLEMAN_VELOCITY_SPARSITY = Q


@dataclass
class CostReport:
    qubits: int = 0
    cx_equivalent: int = 0
    shots: int = 0
    carleman_variables: dict[int, int] = field(default_factory=dict)
    registers: int = 0
    provenance: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        vals = [self.qubits, self.cx_equivalent, self.shots, self.registers]
        vals += list(self.carleman_variables.values())
        if any(v < 0 for v in vals):
            raise DomainError("cost figures must be non-negative")


def qubit_estimate(re: float) -> int:
    """Qubits needed to hold Re^3 degrees of freedom: ceil(3 log2 Re)."""
    if not re > 1:
        raise DomainError(f"Reynolds number must exceed 1, got {re}")
    return math.ceil(3 * math.log2(re))


def generic_unitary_bound(q: int) -> int:
    """Two-qubit gates for an arbitrary q-qubit unitary: 4**q (Python int, exact)."""
    if q < 1:
        raise DomainError("need at least one qubit")
    return 4**q


def carleman_variable_count(g: int, kappa: int, k: int) -> int:
    """Independent components at Carleman level k: G * kappa**(k - 1)."""
    if g < 1 or kappa < 1 or k < 1:
        raise DomainError("sites, sparsity and level must be positive")
    return g * kappa ** (k - 1)


def carleman_register_count(k: int, fully_quantum: bool = False) -> int:
    """Extra registers: k + 1 for collision only, 2(k + 1) with streaming too."""
    if k < 1:
        raise DomainError("Carleman order must be >= 1")
    return 2 * (k + 1) if fully_quantum else k + 1


def _as_fraction(x: float) -> Fraction:
    return Fraction(x).limit_denominator(10**12)


def shots_per_amplitude(precision: float) -> int:
    p = _as_fraction(precision)
    if not 0 < p <= 1:
        raise DomainError(f"precision must lie in (0, 1], got {precision}")
    return math.ceil(1 / (p * p))


def hybrid_step_cost(g: int, precision: float, readout_constant: int = 1) -> CostReport:
    """Per-timestep Q2C readout and C2Q re-initialization for a hybrid loop.

    Readout shots are modelled as ``readout_constant * g**2 * ceil(1/precision**2)``;
    re-initialization as one state preparation of ``9 g`` amplitudes.
    """
    if g < 1:
        raise DomainError("need at least one site")
    spa = shots_per_amplitude(precision)
    shots = readout_constant * g * g * spa
    return CostReport(
        shots=shots,
        provenance={
            "shots": f"model, not measurement: {readout_constant} * g^2 * ceil(1/precision^2), g={g}, spa={spa}",
            "reinit_amplitudes": f"{Q * g} amplitudes per state preparation",
        },
    )


def reinit_amplitudes(g: int) -> int:
    return Q * g


def reynolds_report(re: float) -> CostReport:
    q = qubit_estimate(re)
    return CostReport(
        qubits=q,
        provenance={"qubits": "ceil(3 log2 Re)", "generic_bound": "4^Q"},
    )


def streaming_report(cx_equivalent: int, qubits: int, sites: int, k: int = 2) -> CostReport:
    return CostReport(
        qubits=qubits,
        cx_equivalent=cx_equivalent,
        carleman_variables={
            m: carleman_variable_count(sites, CARLEMAN_VELOCITY_SPARSITY, m) for m in range(1, k + 1)
        },
        registers=carleman_register_count(k, fully_quantum=True),
        provenance={
            "cx_equivalent": "sum over S_i gates of the MCX->CX table",
            "carleman_variables": "G * kappa^(k-1), kappa = 9",
            "registers": "2(k+1)",
        },
    )
