from __future__ import annotations

import itertools
import math
from collections import defaultdict

import numpy as np
import pytest
import scipy.sparse as sp
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from carleman_workbench import carleman_ode as co
from carleman_workbench.errors import BlowUpError, DomainError, MemoryBudgetError


def toy_system(n=2, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    L = rng.integers(-3, 4, (n, n)).astype(float)
    T = rng.integers(-2, 3, (n, n, n)).astype(float)
    return co.QuadraticSystem(L=L, Q=co.symmetrize(T), scale=scale)


def logistic():
    return co.QuadraticSystem(L=[[-1.0]], Q=[[1.0]])


def test_linear_system_blocks():
    L = sp.csr_matrix(np.array([[-1.0, 2.0], [0.5, -3.0]]))
    sys = co.QuadraticSystem(L=L, Q=sp.csr_matrix((2, 4)))
    mat = co.build_carleman_matrix(sys, 2)
    assert mat.upper[0].nnz == 0
    I = np.eye(2)
    want = np.kron(L.toarray(), I) + np.kron(I, L.toarray())
    np.testing.assert_array_equal(mat.diag[1].toarray(), want)
    assert mat.level_sizes() == [2, 4]
    assert mat.assemble().shape == (6, 6)


def test_block_structure_is_upper_bidiagonal():
    mat = co.build_carleman_matrix(toy_system(), 3)
    M = mat.assemble().toarray()
    off = mat.offsets()
    for r in range(3):
        for c in range(3):
            block = M[off[r] : off[r + 1], off[c] : off[c + 1]]
            if c < r or c > r + 1:
                assert not block.any()


def test_product_rule_oracle_symbolic():
    n, k = 2, 3
    sys = toy_system(n, seed=3, scale=0.5)
    ys = sympy.symbols(f"y0:{n}")
    Ld = sympy.Matrix(sys.L.toarray().astype(int))
    T = sys.Q.toarray().reshape(n, n, n)
    rhs = [
        sum(Ld[a, b] * ys[b] for b in range(n))
        + sympy.Rational(1, 2) * sum(sympy.nsimplify(T[a, b, c]) * ys[b] * ys[c] for b in range(n) for c in range(n))
        for a in range(n)
    ]
    mat = co.build_carleman_matrix(sys, k)
    M = mat.assemble().toarray()
    off = mat.offsets()
    yv = np.array([0.7, -0.4])
    subs = dict(zip(ys, yv))
    z = co.lift_vector(yv, k)
    for m in (2, 3):
        monomials = [sympy.Mul(*[ys[i] for i in idx]) for idx in itertools.product(range(n), repeat=m)]
        deriv = [sum(sympy.diff(mono, ys[c]) * rhs[c] for c in range(n)) for mono in monomials]
        if m == k:
            # the top level drops the coupling to level k + 1
            deriv = [sum(sympy.diff(mono, ys[c]) * sum(Ld[c, b] * ys[b] for b in range(n)) for c in range(n)) for mono in monomials]
        want = np.array([float(d.subs(subs)) for d in deriv])
        got = M[off[m - 1] : off[m]] @ z
        np.testing.assert_allclose(got, want, atol=1e-12)


def _enumerate_kron_sum(X: sp.csr_matrix, m: int, n: int) -> int:
    """Count nonzeros of sum_p I..X..I by walking every multi-index row."""
    X = X.tocsr()
    entries: dict[tuple[int, int], float] = defaultdict(float)
    width = 1 if X.shape[1] == n else 2
    for idx in itertools.product(range(n), repeat=m):
        row = 0
        for v in idx:
            row = row * n + v
        for p in range(m):
            a = idx[p]
            for jj in range(X.indptr[a], X.indptr[a + 1]):
                col_slot = X.indices[jj]
                new = list(idx[:p])
                new += [col_slot] if width == 1 else list(divmod(col_slot, n))
                new += list(idx[p + 1 :])
                col = 0
                for v in new:
                    col = col * n + v
                entries[(row, col)] += X.data[jj]
    return sum(1 for v in entries.values() if v != 0.0)


def test_burgers_level_nnz_matches_enumeration():
    n = 16
    sys = co.burgers_system(n, 0.05)
    mat = co.build_carleman_matrix(sys, 3)
    got = mat.level_nnz()
    assert got[(1, 1)] == _enumerate_kron_sum(sys.L, 1, n) == 3 * n
    assert got[(2, 2)] == _enumerate_kron_sum(sys.L, 2, n)
    assert got[(3, 3)] == _enumerate_kron_sum(sys.L, 3, n)
    assert got[(1, 2)] == _enumerate_kron_sum(sys.Q, 1, n) == 4 * n
    assert got[(2, 3)] == _enumerate_kron_sum(sys.Q, 2, n)


def test_burgers_fourier_symbol():
    n, nu = 16, 0.03
    sys = co.burgers_system(n, nu)
    h = 1.0 / n
    x = co.burgers_grid(n)
    for kappa in range(n // 2 + 1):
        v = np.exp(2j * np.pi * kappa * x)
        lam = -nu * (2 - 2 * np.cos(2 * np.pi * kappa * h)) / h**2
        np.testing.assert_allclose(sys.L @ v, lam * v, atol=1e-10)


def test_burgers_quadratic_term():
    n = 16
    sys = co.burgers_system(n, 0.1)
    assert sys.is_symmetric()
    np.testing.assert_allclose(sys.Q @ np.kron(np.full(n, 2.5), np.full(n, 2.5)), 0.0, atol=1e-12)
    u = np.random.default_rng(4).standard_normal(n)
    h = 1.0 / n
    want = -u * (np.roll(u, -1) - np.roll(u, 1)) / (2 * h)
    np.testing.assert_allclose(sys.Q @ np.kron(u, u), want, atol=1e-12)
    assert sys.kappa == 4


def test_burgers_helpers():
    assert co.burgers_reynolds(np.sin(np.linspace(0, 6, 50)), 0.05, 1.0) == pytest.approx(20.0, rel=1e-3)
    sys = co.burgers_system(16, 0.05)
    assert co.default_dt(sys, 0.0) == pytest.approx(0.1 / 256 / 0.05)
    assert co.default_dt(sys, 1e6) == pytest.approx(1 / 16 / 1e6)
    with pytest.raises(DomainError):
        co.burgers_system(3, 0.1)


def test_euler_linear_first_block_is_exact():
    L = np.array([[-2.0, 1.0], [0.5, -1.0]])
    sys = co.QuadraticSystem(L=L, Q=np.zeros((2, 4)))
    y0 = np.array([1.0, -0.5])
    traj = co.euler_march(co.build_carleman_matrix(sys, 3), y0, 0.01, 100)
    y = y0.copy()
    for _ in range(100):
        y = y + 0.01 * L @ y
    np.testing.assert_allclose(traj[-1], y, atol=1e-12)


@settings(max_examples=20)
@given(st.integers(0, 1000), st.integers(1, 4))
def test_euler_single_step_definition(seed, k):
    sys = toy_system(3, seed=seed, scale=0.3)
    y0 = np.random.default_rng(seed).uniform(-1, 1, 3)
    dt = 0.5 / max(float(abs(sys.L).sum(axis=1).max()), 1.0)
    traj = co.euler_march(co.build_carleman_matrix(sys, k), y0, dt, 1)
    if k == 1:
        want = y0 + dt * (sys.L @ y0)
    else:
        want = y0 + dt * (sys.L @ y0 + 0.3 * sys.Q @ np.kron(y0, y0))
    np.testing.assert_allclose(traj[1], want, atol=1e-12)


def test_logistic_higher_order_is_more_accurate():
    y0, T, steps = 0.1, 3.0, 3000
    exact = 1.0 / (1.0 + (1.0 / y0 - 1.0) * math.exp(T))
    err = {}
    for k in (2, 4):
        traj = co.euler_march(co.build_carleman_matrix(logistic(), k), np.array([y0]), T / steps, steps)
        err[k] = abs(traj[-1, 0] - exact)
    assert err[4] < err[2]


def test_truncation_error_linear_is_independent_of_k():
    sys = co.QuadraticSystem(L=[[-1.0, 0.2], [0.0, -0.5]], Q=np.zeros((2, 4)))
    table = co.truncation_error(sys, np.array([1.0, 1.0]), 0.01, 50, [1, 2, 3])
    assert [k for k, _ in table] == [1, 2, 3]
    errs = [e for _, e in table]
    assert max(errs) < 1e-13


def test_burgers_truncation_improves_at_moderate_reynolds():
    n, steps = 16, 4000
    sys = co.burgers_system(n, 1.0 / 20)
    u0 = np.sin(2 * np.pi * co.burgers_grid(n))
    errs = [e for _, e in co.truncation_error(sys, u0, 0.5 / steps, steps, [1, 2, 3])]
    assert errs[2] <= errs[1] <= errs[0]


def test_stability_bound_enforced():
    sys = co.burgers_system(16, 0.1)
    mat = co.build_carleman_matrix(sys, 1)
    with pytest.raises(DomainError):
        co.euler_march(mat, np.ones(16), 1.0, 1)


def test_memory_budget():
    sys = co.burgers_system(16, 0.1)
    with pytest.raises(MemoryBudgetError) as info:
        co.build_carleman_matrix(sys, 4, memory_budget=1000)
    assert info.value.required_bytes > info.value.budget_bytes


def test_blow_up_reported():
    sys = co.QuadraticSystem(L=[[0.0]], Q=[[1.0]])
    with pytest.raises(BlowUpError):
        co.direct_euler(sys, np.array([2.0]), 0.1, 200)
    with pytest.raises(BlowUpError):
        co.truncation_error(sys, np.array([2.0]), 0.1, 200, [1, 2])


def test_inconsistent_shapes_rejected():
    with pytest.raises(DomainError):
        co.QuadraticSystem(L=np.eye(2), Q=np.zeros((2, 3)))
