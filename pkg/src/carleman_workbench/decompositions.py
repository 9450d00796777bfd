"""Explicit CX + single-qubit constructions used to validate the CX cost table.

``mcx_ops(m)`` realises an X gate with ``m`` controls on qubits ``0..m-1``
and target ``m`` as ``H . C^m(Z) . H``, where ``C^m(Z)`` is the phase
polynomial ``exp(i pi x_0 ... x_m)`` expanded over parities and walked in
Gray-code order. It uses ``2**(m+1) - 2`` CX gates: 6 for the Toffoli, 14
for the three-control gate.
"""

from __future__ import annotations

import numpy as np

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def _phase_parities(qubits: list[int], k_total: int) -> list[tuple]:
    """Phases for every nonempty parity containing ``qubits[-1]``, then recurse."""
    if not qubits:
        return []
    acc, rest = qubits[-1], qubits[:-1]
    m = len(rest)
    ops: list[tuple] = []
    prev = 0
    for t in range(2**m):
        g = t ^ (t >> 1)
        diff = g ^ prev
        if diff:
            ops.append(("cx", rest[diff.bit_length() - 1], acc))
        prev = g
        size = bin(g).count("1") + 1
        theta = np.pi * 2.0 ** (1 - k_total) * (-1) ** (size - 1)
        ops.append(("p", acc, theta))
    if prev:
        ops.append(("cx", rest[prev.bit_length() - 1], acc))
    return ops + _phase_parities(rest, k_total)


def mcx_ops(m: int) -> list[tuple]:
    if m < 1:
        raise ValueError("need at least one control")
    qubits = list(range(m + 1))
    return [("h", m)] + _phase_parities(qubits, m + 1) + [("h", m)]


def cx_count(ops: list[tuple]) -> int:
    return sum(1 for op in ops if op[0] == "cx")


def ops_unitary(ops: list[tuple], n: int) -> np.ndarray:
    """Dense unitary of an op list; qubit ``q`` is bit ``q`` of the basis index."""
    dim = 2**n
    U = np.eye(dim, dtype=complex)
    idx = np.arange(dim)
    for op in ops:
        if op[0] == "cx":
            _, c, t = op
            perm = np.where((idx >> c) & 1, idx ^ (1 << t), idx)
            U = U[perm]
        elif op[0] == "p":
            _, q, theta = op
            U = np.where(((idx >> q) & 1)[:, None] == 1, np.exp(1j * theta), 1.0) * U
        elif op[0] == "h":
            _, q = op
            G = np.eye(1, dtype=complex)
            for b in range(n - 1, -1, -1):
                G = np.kron(G, _H if b == q else np.eye(2))
            U = G @ U
        else:
            raise ValueError(f"unknown op {op[0]!r}")
    return U


def mcx_unitary(m: int) -> np.ndarray:
    n = m + 1
    idx = np.arange(2**n)
    controls = (1 << m) - 1
    perm = np.where((idx & controls) == controls, idx ^ (1 << m), idx)
    return np.eye(2**n, dtype=complex)[perm]
