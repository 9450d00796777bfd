"""Statevector emulation of the collision-free D2Q9 streaming circuits.

Qubit ``q`` is bit ``q`` of the basis index. Registers are laid out velocity
first, then x, then y, each little-endian, so the basis index of
``|i>|x>|y>`` is ``i + 2**vq * (x + nx * y)``.

The emulator reads amplitudes back exactly (``decode``). Real hardware cannot
do this: every amplitude would have to be estimated from repeated
measurements, which is what :mod:`carleman_workbench.costs` models.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SizingError
from .lattice import C, Q, LatticeConfig

MAX_QUBITS = 26
VELOCITY_QUBITS = 4


@dataclass(frozen=True)
class QubitLayout:
    vq: int
    xq: int
    yq: int

    def __post_init__(self):
        if 2**self.vq < Q:
            raise SizingError(f"velocity register of {self.vq} qubits cannot hold {Q} velocities")
        if self.total > MAX_QUBITS:
            raise SizingError(f"{self.total} qubits exceeds the dense statevector cap of {MAX_QUBITS}")

    @property
    def total(self) -> int:
        return self.vq + self.xq + self.yq

    @property
    def nx(self) -> int:
        return 2**self.xq

    @property
    def ny(self) -> int:
        return 2**self.yq

    @property
    def velocity_qubits(self) -> list[int]:
        return list(range(self.vq))

    @property
    def x_qubits(self) -> list[int]:
        return list(range(self.vq, self.vq + self.xq))

    @property
    def y_qubits(self) -> list[int]:
        return list(range(self.vq + self.xq, self.total))

    def index(self, i: int, x: int, y: int) -> int:
        return i + (x << self.vq) + (y << (self.vq + self.xq))


def _log2_exact(n: int, what: str) -> int:
    if n < 1 or n & (n - 1):
        raise SizingError(f"{what} = {n} is not a power of two")
    return n.bit_length() - 1


def layout_for(cfg: LatticeConfig) -> QubitLayout:
    return QubitLayout(VELOCITY_QUBITS, _log2_exact(cfg.nx, "nx"), _log2_exact(cfg.ny, "ny"))


@dataclass(frozen=True)
class Gate:
    """X (no controls) or multi-controlled X. Controls are ``(qubit, positive)``."""

    target: int
    controls: tuple[tuple[int, bool], ...] = ()

    def __post_init__(self):
        qs = [q for q, _ in self.controls]
        if self.target in qs:
            raise DomainError(f"target {self.target} is also a control")
        if len(set(qs)) != len(qs):
            raise DomainError("repeated control qubit")

    @property
    def kind(self) -> str:
        return "X" if not self.controls else "MCX"

    @property
    def arity(self) -> int:
        return len(self.controls)

    def qubits(self) -> list[int]:
        return [self.target] + [q for q, _ in self.controls]

    def to_text(self) -> str:
        if not self.controls:
            return f"X t={self.target}"
        cs = ",".join(f"{'+' if pos else '-'}{q}" for q, pos in self.controls)
        return f"MCX t={self.target} c={cs}"

    @classmethod
    def from_text(cls, line: str) -> "Gate":
        parts = line.split()
        if not parts or parts[0] not in ("X", "MCX"):
            raise DomainError(f"unrecognised gate line {line!r}")
        fields = dict(p.split("=", 1) for p in parts[1:])
        controls = ()
        if parts[0] == "MCX":
            controls = tuple((int(c[1:]), c[0] == "+") for c in fields["c"].split(","))
        return cls(int(fields["t"]), controls)


@dataclass(frozen=True)
class Circuit:
    layout: QubitLayout
    gates: tuple[Gate, ...] = field(default_factory=tuple)

    def __post_init__(self):
        n = self.layout.total
        for k, g in enumerate(self.gates):
            if any(q < 0 or q >= n for q in g.qubits()):
                raise DomainError(f"gate {k} ({g.to_text()}) touches a qubit outside 0..{n - 1}")

    def __len__(self) -> int:
        return len(self.gates)

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.layout != self.layout:
            raise DomainError("cannot concatenate circuits on different layouts")
        return Circuit(self.layout, self.gates + other.gates)

    def inverse(self) -> "Circuit":
        # X/MCX are self-inverse
        return Circuit(self.layout, tuple(reversed(self.gates)))

    def to_text(self) -> str:
        l = self.layout
        head = f"# layout vq={l.vq} xq={l.xq} yq={l.yq}\n"
        return head + "".join(g.to_text() + "\n" for g in self.gates)

    @classmethod
    def from_text(cls, text: str, layout: QubitLayout) -> "Circuit":
        gates = []
        for line in text.splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                gates.append(Gate.from_text(line))
        return cls(layout, tuple(gates))


@dataclass(frozen=True)
class EncodedField:
    layout: QubitLayout
    amplitudes: np.ndarray
    norm_factor: float


def encode(f: np.ndarray) -> EncodedField:
    """Amplitude-encode populations ``f[i, x, y]`` as ``f / ||f||_2``."""
    nq, nx, ny = f.shape
    if nq != Q:
        raise DomainError(f"expected {Q} populations, got {nq}")
    layout = QubitLayout(VELOCITY_QUBITS, _log2_exact(nx, "nx"), _log2_exact(ny, "ny"))
    norm = float(np.linalg.norm(f))
    if norm == 0.0:
        raise DomainError("cannot normalise an all-zero field")
    amps = np.zeros(2**layout.total, dtype=complex)
    view = amps.reshape(ny, nx, 2**layout.vq)
    view[:, :, :Q] = np.transpose(f, (2, 1, 0)) / norm
    return EncodedField(layout, amps, norm)


def decode(s: EncodedField) -> np.ndarray:
    l = s.layout
    view = s.amplitudes.reshape(l.ny, l.nx, 2**l.vq)
    return np.ascontiguousarray(np.transpose(view[:, :, :Q].real, (2, 1, 0))) * s.norm_factor


def invalid_slots(s: EncodedField) -> np.ndarray:
    l = s.layout
    return s.amplitudes.reshape(l.ny, l.nx, 2**l.vq)[:, :, Q:]


def _apply_gate(psi: np.ndarray, gate: Gate, n: int) -> None:
    t = psi.reshape((2,) * n)  # axis n-1-q is qubit q
    sel = [slice(None)] * n
    for q, pos in gate.controls:
        sel[n - 1 - q] = 1 if pos else 0
    s0, s1 = list(sel), list(sel)
    s0[n - 1 - gate.target] = 0
    s1[n - 1 - gate.target] = 1
    s0, s1 = tuple(s0), tuple(s1)
    tmp = t[s0].copy()
    t[s0] = t[s1]
    t[s1] = tmp


def apply_circuit(c: Circuit, s: EncodedField) -> EncodedField:
    if c.layout != s.layout:
        raise DomainError("circuit and state layouts differ")
    psi = s.amplitudes.copy()
    n = c.layout.total
    for g in c.gates:
        _apply_gate(psi, g, n)
    return EncodedField(s.layout, psi, s.norm_factor)


def increment_gates(register: list[int], controls=()) -> list[Gate]:
    """Modular +1 on a little-endian register: MCX cascade from the top bit down."""
    controls = tuple(controls)
    gates = []
    for k in range(len(register) - 1, -1, -1):
        below = tuple((q, True) for q in register[:k])
        gates.append(Gate(register[k], below + controls))
    return gates


def decrement_gates(register: list[int], controls=()) -> list[Gate]:
    """Modular -1: the increment cascade with the register controls negated (borrow)."""
    controls = tuple(controls)
    gates = []
    for k in range(len(register) - 1, -1, -1):
        below = tuple((q, False) for q in register[:k])
        gates.append(Gate(register[k], below + controls))
    return gates


def velocity_controls(i: int, layout: QubitLayout) -> tuple[tuple[int, bool], ...]:
    return tuple((q, bool((i >> b) & 1)) for b, q in enumerate(layout.velocity_qubits))


def streaming_circuit(i: int, layout: QubitLayout) -> Circuit:
    """S_i: shift positions by c_i, active only when the velocity register holds i."""
    if not 0 <= i < Q:
        raise DomainError(f"velocity index must be in 0..{Q - 1}, got {i}")
    cx, cy = (int(v) for v in C[i])
    gates: list[Gate] = []
    if cx == 0 and cy == 0:
        return Circuit(layout, ())
    vc = velocity_controls(i, layout)
    for comp, reg in ((cx, layout.x_qubits), (cy, layout.y_qubits)):
        if comp == 1:
            gates += increment_gates(reg, vc)
        elif comp == -1:
            gates += decrement_gates(reg, vc)
    return Circuit(layout, tuple(gates))


def full_streaming_circuit(layout: QubitLayout) -> Circuit:
    """The direct sum over all velocities, applied as S_1 ... S_8 in sequence."""
    c = Circuit(layout, ())
    for i in range(1, Q):
        c = c + streaming_circuit(i, layout)
    return c


def permutation_check(c: Circuit) -> np.ndarray:
    """Basis-state permutation realised by ``c``: ``perm[b]`` is the image of ``|b>``.

    Computed by classical reversible simulation on basis indices, independent
    of the amplitude kernel in :func:`apply_circuit`.
    """
    n = c.layout.total
    idx = np.arange(2**n, dtype=np.int64)
    for g in c.gates:
        mask = np.ones(idx.shape, dtype=bool)
        for q, pos in g.controls:
            bit = (idx >> q) & 1
            mask &= bit == (1 if pos else 0)
        idx = np.where(mask, idx ^ (1 << g.target), idx)
    if np.unique(idx).size != idx.size:
        raise AssertionError("circuit does not act as a bijection on basis states")
    return idx


# CX cost of an X gate with m controls, no ancillas. Entries for m <= 3 match
# explicit constructions (CX, 6-CX Toffoli, 14-CX Gray-code C3X); beyond that
# the quadratic m(3m+1)/2 - 1 through those three points is a stand-in ledger.
CX_TABLE = {0: 0, 1: 1, 2: 6, 3: 14}


def cx_cost(arity: int, table: dict[int, int] | None = None) -> int:
    table = CX_TABLE if table is None else table
    if arity in table:
        return table[arity]
    if arity < 0:
        raise DomainError("negative control count")
    return arity * (3 * arity + 1) // 2 - 1


def gate_counts(c: Circuit, table: dict[int, int] | None = None) -> dict:
    """Raw gate counts by control arity plus the CX-equivalent total."""
    by_arity: dict[int, int] = {}
    for g in c.gates:
        by_arity[g.arity] = by_arity.get(g.arity, 0) + 1
    cx = sum(n * cx_cost(a, table) for a, n in by_arity.items())
    return {"gates": len(c.gates), "by_arity": dict(sorted(by_arity.items())), "cx_equivalent": cx}


def stream_field(f: np.ndarray, velocities=None) -> np.ndarray:
    """Encode, apply the chosen S_i circuits, decode."""
    s = encode(f)
    vs = range(1, Q) if velocities is None else velocities
    c = Circuit(s.layout, ())
    for i in vs:
        c = c + streaming_circuit(i, s.layout)
    return decode(apply_circuit(c, s))
