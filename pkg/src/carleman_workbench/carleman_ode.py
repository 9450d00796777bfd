"""Carleman linearization of quadratic ODE systems ``dy/dt = L y + s Q(y, y)``.

Level ``m`` holds the Kronecker power ``y^{(x)m}`` (``n**m`` variables, no
symmetry reduction). The truncated matrix is block upper-bidiagonal:

    d/dt y^(m) = M[m, m] y^(m) + M[m, m+1] y^(m+1),   m = 1..k

with the level-``k`` coupling to ``k + 1`` dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import BlowUpError, DomainError, MemoryBudgetError

DEFAULT_MEMORY_BUDGET = 2 * 1024**3


@dataclass
class QuadraticSystem:
    """``L`` is ``n x n``; ``Q`` is stored flattened as ``n x n**2`` so that
    ``Q(a, b) = Q @ kron(a, b)``."""

    L: sp.csr_matrix
    Q: sp.csr_matrix
    scale: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.L = sp.csr_matrix(self.L, dtype=float)
        self.Q = sp.csr_matrix(self.Q, dtype=float)
        n = self.L.shape[0]
        if self.L.shape != (n, n) or self.Q.shape != (n, n * n):
            raise DomainError(f"inconsistent shapes L{self.L.shape}, Q{self.Q.shape}")

    @property
    def n(self) -> int:
        return self.L.shape[0]

    @property
    def kappa(self) -> int:
        """Maximum number of nonzeros in a row of Q."""
        return int(np.diff(self.Q.indptr).max()) if self.Q.nnz else 0

    def rhs(self, y: np.ndarray) -> np.ndarray:
        return self.L @ y + self.scale * (self.Q @ np.kron(y, y))

    def is_symmetric(self, tol: float = 0.0) -> bool:
        n = self.n
        T = self.Q.toarray().reshape(n, n, n)
        return bool(np.abs(T - T.transpose(0, 2, 1)).max() <= tol)


def symmetrize(T: np.ndarray) -> sp.csr_matrix:
    """Dense ``(n, n, n)`` bilinear tensor -> symmetric flattened sparse Q."""
    n = T.shape[0]
    S = 0.5 * (T + T.transpose(0, 2, 1))
    return sp.csr_matrix(S.reshape(n, n * n))


@dataclass
class CarlemanMatrix:
    order: int
    n: int
    diag: list  # diag[m-1] = M[m, m]
    upper: list  # upper[m-1] = M[m, m+1], m = 1..k-1

    def level_sizes(self) -> list[int]:
        return [self.n**m for m in range(1, self.order + 1)]

    def offsets(self) -> list[int]:
        return [0] + list(np.cumsum(self.level_sizes()))

    def assemble(self) -> sp.csr_matrix:
        k = self.order
        blocks = [[None] * k for _ in range(k)]
        for m in range(k):
            blocks[m][m] = self.diag[m]
            if m + 1 < k:
                blocks[m][m + 1] = self.upper[m]
        return sp.bmat(blocks, format="csr")

    def level_nnz(self) -> dict[tuple[int, int], int]:
        out = {}
        for m in range(1, self.order + 1):
            out[(m, m)] = int(self.diag[m - 1].nnz)
            if m < self.order:
                out[(m, m + 1)] = int(self.upper[m - 1].nnz)
        return out


def kron_sum_power(X: sp.spmatrix, m: int, n: int) -> sp.csr_matrix:
    """``sum_p I^(p-1) (x) X (x) I^(m-p)`` for an operator X acting on one slot."""
    total = None
    for p in range(1, m + 1):
        left = sp.identity(n ** (p - 1), format="csr")
        right = sp.identity(n ** (m - p), format="csr")
        term = sp.kron(sp.kron(left, X, format="csr"), right, format="csr")
        total = term if total is None else total + term
    return total.tocsr()


def estimate_bytes(sys: QuadraticSystem, k: int) -> int:
    n = sys.n
    nnz = 0
    for m in range(1, k + 1):
        nnz += m * sys.L.nnz * n ** (m - 1)
        if m < k:
            nnz += m * sys.Q.nnz * n ** (m - 1)
    rows = sum(n**m for m in range(1, k + 1))
    # csr data + indices, indptr, plus a few state vectors
    return 12 * nnz + 8 * rows + 8 * 4 * rows


def build_carleman_matrix(
    sys: QuadraticSystem, k: int, memory_budget: int = DEFAULT_MEMORY_BUDGET
) -> CarlemanMatrix:
    if k < 1:
        raise DomainError("Carleman order must be >= 1")
    need = estimate_bytes(sys, k)
    if need > memory_budget:
        raise MemoryBudgetError(need, memory_budget)
    n = sys.n
    Qs = sys.scale * sys.Q
    diag = [kron_sum_power(sys.L, m, n) for m in range(1, k + 1)]
    upper = [kron_sum_power(Qs, m, n) for m in range(1, k)]
    return CarlemanMatrix(order=k, n=n, diag=diag, upper=upper)


def lift_vector(y: np.ndarray, k: int) -> np.ndarray:
    parts = [y]
    for _ in range(k - 1):
        parts.append(np.kron(parts[-1], y))
    return np.concatenate(parts)


def _inf_norm(A: sp.spmatrix) -> float:
    return float(abs(A).sum(axis=1).max()) if A.nnz else 0.0


def euler_march(
    mat: CarlemanMatrix,
    y0: np.ndarray,
    dt: float,
    steps: int,
    L: sp.spmatrix | None = None,
) -> np.ndarray:
    """Forward-Euler march of the truncated lifted system.

    Returns the first-block trajectory, shape ``(steps + 1, n)``. ``L``, when
    given, is used for the ``dt * ||L||_inf < 1`` stability check.
    """
    if dt <= 0:
        raise DomainError("dt must be positive")
    Lchk = mat.diag[0] if L is None else L
    if dt * _inf_norm(Lchk) >= 1.0:
        raise DomainError(f"dt*||L|| = {dt * _inf_norm(Lchk):.3g} violates the bound < 1")
    M = mat.assemble()
    z = lift_vector(np.asarray(y0, dtype=float), mat.order)
    n = mat.n
    ref = max(float(np.linalg.norm(z)), np.finfo(float).tiny)
    traj = np.empty((steps + 1, n))
    traj[0] = z[:n]
    for t in range(1, steps + 1):
        z = z + dt * (M @ z)
        nz = float(np.linalg.norm(z))
        if not math.isfinite(nz) or nz > 1e6 * ref:
            raise BlowUpError(f"Carleman march diverged at step {t}", step=t)
        traj[t] = z[:n]
    return traj


def direct_euler(sys: QuadraticSystem, y0: np.ndarray, dt: float, steps: int) -> np.ndarray:
    """Forward Euler on the nonlinear system itself (the truncation reference)."""
    y = np.asarray(y0, dtype=float).copy()
    ref = max(float(np.linalg.norm(y)), np.finfo(float).tiny)
    traj = np.empty((steps + 1, sys.n))
    traj[0] = y
    for t in range(1, steps + 1):
        y = y + dt * sys.rhs(y)
        ny = float(np.linalg.norm(y))
        if not math.isfinite(ny) or ny > 1e6 * ref:
            raise BlowUpError(f"reference integration diverged at step {t}", step=t)
        traj[t] = y
    return traj


def burgers_system(n: int, nu: float, length: float = 1.0) -> QuadraticSystem:
    """Periodic centered differences for ``u_t = -u u_x + nu u_xx``."""
    if n < 4:
        raise DomainError("Burgers grid needs at least 4 points")
    h = length / n
    idx = np.arange(n)
    up, dn = (idx + 1) % n, (idx - 1) % n
    L = sp.csr_matrix(
        (
            np.concatenate([np.full(n, -2.0), np.ones(n), np.ones(n)]) * nu / h**2,
            (np.concatenate([idx, idx, idx]), np.concatenate([idx, up, dn])),
        ),
        shape=(n, n),
    )
    # -u_l (u_{l+1} - u_{l-1}) / 2h, split symmetrically between the two slots
    rows, cols, vals = [], [], []
    for l in range(n):
        for a, b, v in ((l, up[l], -1.0), (l, dn[l], 1.0)):
            coef = v / (2 * h) / 2
            rows += [l, l]
            cols += [a * n + b, b * n + a]
            vals += [coef, coef]
    Q = sp.csr_matrix((vals, (rows, cols)), shape=(n, n * n))
    Q.sum_duplicates()
    return QuadraticSystem(L=L, Q=Q, scale=1.0, meta=dict(kind="burgers", nu=nu, length=length, h=h))


def burgers_grid(n: int, length: float = 1.0) -> np.ndarray:
    return np.arange(n) * (length / n)


def burgers_reynolds(u0: np.ndarray, nu: float, length: float) -> float:
    return float(np.max(np.abs(u0))) * length / nu


def default_dt(sys: QuadraticSystem, umax: float) -> float:
    """``0.1 h^2 / nu``, capped by the advective CFL ``h / umax``."""
    h, nu = sys.meta["h"], sys.meta["nu"]
    dt = 0.1 * h * h / nu
    if umax > 0:
        dt = min(dt, h / umax)
    return dt


def relative_error(a: np.ndarray, ref: np.ndarray) -> float:
    d = float(np.linalg.norm(ref))
    if d == 0.0:
        raise DomainError("reference state is zero; relative error undefined")
    return float(np.linalg.norm(a - ref)) / d


def truncation_error(
    sys: QuadraticSystem,
    y0: np.ndarray,
    dt: float,
    steps: int,
    k_list,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> list[tuple[int, float]]:
    """Final-time relative error of each truncation order against direct Euler.

    Raises ``BlowUpError`` when the reference itself diverges. A diverging
    Carleman march yields ``inf`` for that order.
    """
    ref = direct_euler(sys, y0, dt, steps)[-1]
    out = []
    for k in k_list:
        mat = build_carleman_matrix(sys, int(k), memory_budget)
        try:
            yk = euler_march(mat, y0, dt, steps, L=sys.L)[-1]
            out.append((int(k), relative_error(yk, ref)))
        except BlowUpError:
            out.append((int(k), math.inf))
    return out
