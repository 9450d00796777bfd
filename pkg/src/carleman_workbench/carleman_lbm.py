"""Second-order Carleman lifting of the D2Q9 lattice Boltzmann map.

Collision is made exactly quadratic in the populations by replacing the
``1/rho`` factors of the equilibrium with 1 (expansion about unit density):

    f -> A f + B(f, f)

The truncated Carleman state holds the populations ``F1[i, x, y]`` and the
bilocal products ``F2[i, j, x, y, a, b] = f_i(x, y) f_j(x + dx_a, y + dy_b)``
for separations inside a window. When ``2 w + 1`` covers a grid side, that
offset axis becomes periodic with one slot per lattice separation and
nothing can leak along it.

By default the truncation is taken in deviations ``delta = f - w`` from the
rest equilibrium (``center=True``). The stored variables are the raw products
either way; centering only changes which terms are dropped:
``delta_i delta_j B(delta, delta)``-type terms instead of every cubic monomial
of ``f``, and zero in-flow at the window edge means "uncorrelated
fluctuations" instead of "no particles".
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import lattice as lb
from .errors import BlowUpError, DomainError, WindowLeakageWarning
from .lattice import C, CS2, Q, W, LatticeConfig


@dataclass(frozen=True)
class CollisionTensors:
    A: np.ndarray  # (9, 9)
    B: np.ndarray  # (9, 9, 9), symmetric in the last two indices


@dataclass(frozen=True)
class CarlemanConfig:
    order: int = 2
    window: int = 4
    center: bool = True
    # debug only: keep the cubic/quartic collision terms, computed from F1
    retain_higher_order: bool = False
    leak_warn_fraction: float | None = None

    def __post_init__(self):
        if self.order not in (1, 2):
            raise DomainError(f"Carleman order must be 1 or 2, got {self.order}")
        if self.window < 0:
            raise DomainError("window must be non-negative")


@dataclass
class CarlemanState:
    F1: np.ndarray
    F2: np.ndarray | None
    window: int
    leaked: float = 0.0
    last_leak_fraction: float = 0.0
    steps: int = 0

    @property
    def grid(self) -> tuple[int, int]:
        return self.F1.shape[1], self.F1.shape[2]


def collision_tensors(cfg: LatticeConfig) -> CollisionTensors:
    """Linear and quadratic parts of BGK collision under the unit-density closure."""
    c = C.astype(float)
    cc = c @ c.T  # c_i . c_k
    omega = 1.0 / cfg.tau
    a_eq = W[:, None] * (1.0 + cc / CS2)
    A = (1.0 - omega) * np.eye(Q) + omega * a_eq
    B = omega * W[:, None, None] * (
        cc[:, :, None] * cc[:, None, :] / (2 * CS2 * CS2) - cc[None, :, :] / (2 * CS2)
    )
    return CollisionTensors(A=A, B=B)


def quadratic_collide(f: np.ndarray, tensors: CollisionTensors) -> np.ndarray:
    """Per-site ``A f + B(f, f)`` on a field of shape ``(9, ...)``."""
    lin = np.tensordot(tensors.A, f, axes=(1, 0))
    quad = np.einsum("ikl,k...,l...->i...", tensors.B, f, f)
    return lin + quad


def rho_expansion_bound(f: np.ndarray, tau: float) -> np.ndarray:
    """Per-site bound on ``|quadratic_collide(f) - collide(f)|``.

    The two differ by ``(1/rho - 1) / tau * w_i [(c_i.j)^2 / 2cs^4 - j^2 / 2cs^2]``
    and the bracket, weighted by ``w_i``, never exceeds ``2/3 |j|^2``.
    """
    rho = lb.density(f)
    j = lb.momentum(f)
    return (2.0 / 3.0) * np.abs(1.0 / rho - 1.0) * (j * j).sum(axis=0) / tau


def _offsets(n: int, w: int) -> tuple[np.ndarray, bool]:
    if 2 * w + 1 >= n:
        return np.arange(n), True
    return np.arange(-w, w + 1), False


def _zero_index(n: int, w: int) -> int:
    return 0 if 2 * w + 1 >= n else w


def _shifted_stack(g: np.ndarray, w: int) -> np.ndarray:
    """``out[j, x, y, a, b] = g_j(x + dx_a, y + dy_b)`` (periodic in x, y)."""
    _, nx, ny = g.shape
    ox, _ = _offsets(nx, w)
    oy, _ = _offsets(ny, w)
    ix = (np.arange(nx)[:, None] + ox[None, :]) % nx
    iy = (np.arange(ny)[:, None] + oy[None, :]) % ny
    return g[:, ix[:, None, :, None], iy[None, :, None, :]]


def _pair_shifted(f: np.ndarray, g: np.ndarray, w: int) -> np.ndarray:
    """``out[i, j, x, y, a, b] = f_i(x, y) g_j(x + dx_a, y + dy_b)``."""
    return f[:, None, :, :, None, None] * _shifted_stack(g, w)[None]


def lift(f: np.ndarray, ccfg: CarlemanConfig) -> CarlemanState:
    f = np.array(f, dtype=float)
    F2 = _pair_shifted(f, f, ccfg.window) if ccfg.order == 2 else None
    return CarlemanState(F1=f, F2=F2, window=ccfg.window)


def project(state: CarlemanState) -> np.ndarray:
    return state.F1


def _background(ccfg: CarlemanConfig, shape) -> np.ndarray:
    if not ccfg.center:
        return np.zeros(shape)
    return np.broadcast_to(W[:, None, None], shape)


def _shift_slices(n: int, s: int, periodic: bool):
    """Source/destination slices for moving ``s`` slots along an axis of length ``n``.

    Returns a list of ``(src, dst)`` pairs plus the slice that falls off the
    end (``None`` if nothing is lost).
    """
    if s == 0:
        return [(slice(None), slice(None))], None
    if periodic:
        s %= n
        return [(slice(0, n - s), slice(s, n)), (slice(n - s, n), slice(0, s))], None
    if abs(s) >= n:
        return [], slice(None)
    if s > 0:
        return [(slice(0, n - s), slice(s, n))], slice(n - s, n)
    return [(slice(-s, n), slice(0, n + s))], slice(0, -s)


def _stream_pairs(d2: np.ndarray, w: int) -> tuple[np.ndarray, float]:
    """Move entry ``(i, j, x, d)`` to ``(i, j, x + c_i, d + c_j - c_i)``."""
    _, _, nx, ny, dx, dy = d2.shape
    _, px = _offsets(nx, w)
    _, py = _offsets(ny, w)
    out = np.zeros_like(d2)
    lost = 0.0
    for i in range(Q):
        rolled = np.roll(d2[i], (int(C[i, 0]), int(C[i, 1])), axis=(1, 2))
        for j in range(Q):
            sx, lx = _shift_slices(dx, int(C[j, 0] - C[i, 0]), px)
            sy, ly = _shift_slices(dy, int(C[j, 1] - C[i, 1]), py)
            src = rolled[j]
            for ax, bx in sx:
                for ay, by in sy:
                    out[i, j, :, :, bx, by] = src[:, :, ax, ay]
            if lx is not None:
                lost += float(np.abs(src[:, :, lx, :]).sum())
            if ly is not None:
                # entries lost along both axes are already counted
                keep_x = slice(None) if lx is None else _complement(dx, lx)
                lost += float(np.abs(src[:, :, keep_x, ly]).sum())
    return out, lost


def _complement(n: int, sl: slice) -> slice:
    start, stop, _ = sl.indices(n)
    return slice(stop, n) if start == 0 else slice(0, start)


def _cross_terms(bg: np.ndarray, d1: np.ndarray, f: np.ndarray, w: int) -> np.ndarray:
    """``bg_i f_j' + d1_i bg_j'``: everything in ``f_i f_j'`` except ``d1_i d1_j'``."""
    if not bg.any():
        return 0.0
    return _pair_shifted(bg, f, w) + _pair_shifted(d1, bg, w)


def _apply_pair_linear(A: np.ndarray, d2: np.ndarray) -> np.ndarray:
    """``(A kron A) d2`` on the two population indices."""
    shp = d2.shape
    t = (A @ d2.reshape(Q, -1)).reshape(Q, Q, -1)
    return np.matmul(A, t).reshape(shp)


def _truncated_update(d1, d2, tensors, cfg, ccfg, step):
    """Deviation-space step. Returns ``(d1', d2', lost, leak_fraction)``."""
    A, B = tensors.A, tensors.B
    w = ccfg.window
    if d2 is None:
        return lb.stream(np.tensordot(A, d1, axes=(1, 0)), cfg), None, 0.0, 0.0

    k0x, k0y = _zero_index(cfg.nx, w), _zero_index(cfg.ny, w)
    local = d2[:, :, :, :, k0x, k0y]
    d1c = np.tensordot(A, d1, axes=(1, 0)) + np.einsum("ikl,klxy->ixy", B, local)
    d2c = _apply_pair_linear(A, d2)
    if ccfg.retain_higher_order:
        # exact only while F2 is still the product of F1 with itself
        lin = np.tensordot(A, d1, axes=(1, 0))
        quad = np.einsum("ikl,kxy,lxy->ixy", B, d1, d1)
        d2c += _pair_shifted(lin, quad, w) + _pair_shifted(quad, lin + quad, w)

    total = float(np.abs(d2c).sum())
    d2s, lost = _stream_pairs(d2c, w)
    frac = lost / total if total > 0 else 0.0
    if ccfg.leak_warn_fraction is not None and frac > ccfg.leak_warn_fraction:
        warnings.warn(
            f"window leakage {frac:.3g} exceeds {ccfg.leak_warn_fraction:g} at step {step}",
            WindowLeakageWarning,
            stacklevel=3,
        )
    return lb.stream(d1c, cfg), d2s, lost, frac


def carleman_step(
    state: CarlemanState,
    tensors: CollisionTensors,
    cfg: LatticeConfig,
    ccfg: CarlemanConfig,
) -> CarlemanState:
    """One truncated Carleman update: linearized collision then streaming.

    Returns a new state; ``leaked`` accumulates the L1 mass of second-order
    deviation variables pushed outside the separation window.
    """
    lb.check_field(state.F1, cfg)
    if state.window != ccfg.window:
        raise DomainError("state window does not match Carleman config")
    if (state.F2 is None) != (ccfg.order == 1):
        raise DomainError("state order does not match Carleman config")
    w = ccfg.window
    bg = _background(ccfg, state.F1.shape)
    d1 = state.F1 - bg
    # f_i f_j' = bg_i bg_j' + bg_i d1_j' + d1_i bg_j' + d1_i d1_j'
    d2 = None if state.F2 is None else state.F2 - _cross_terms(bg, d1, state.F1, w)
    d1s, d2s, lost, frac = _truncated_update(d1, d2, tensors, cfg, ccfg, state.steps + 1)
    F1 = bg + d1s
    F2 = None if d2s is None else d2s + _cross_terms(bg, d1s, F1, w)
    return CarlemanState(
        F1=F1,
        F2=F2,
        window=w,
        leaked=state.leaked + lost,
        last_leak_fraction=frac,
        steps=state.steps + 1,
    )


def march(f0: np.ndarray, cfg: LatticeConfig, ccfg: CarlemanConfig, steps: int):
    """Yield ``(t, F1, leaked)`` for t = 1..steps starting from ``lift(f0)``.

    Equivalent to iterating :func:`carleman_step` but stays in deviation
    variables between steps, skipping the raw-product reconstruction.
    """
    tensors = collision_tensors(cfg)
    state = lift(f0, ccfg)
    bg = _background(ccfg, state.F1.shape)
    d1 = state.F1 - bg
    d2 = None if state.F2 is None else state.F2 - _cross_terms(bg, d1, state.F1, ccfg.window)
    del state
    leaked = 0.0
    for t in range(1, steps + 1):
        d1, d2, lost, _ = _truncated_update(d1, d2, tensors, cfg, ccfg, t)
        leaked += lost
        yield t, bg + d1, leaked


def deviation_epsilon(a: np.ndarray, b: np.ndarray) -> float:
    """Relative L2 distance of the velocity fields of ``a`` from reference ``b``."""
    if a.shape != b.shape:
        raise DomainError(f"shape mismatch {a.shape} vs {b.shape}")
    ua = lb.macroscopic(a).u
    ub = lb.macroscopic(b).u
    ref = float(np.sqrt((ub * ub).sum()))
    if ref == 0.0:
        raise DomainError("reference velocity field is identically zero; epsilon undefined")
    return float(np.sqrt(((ua - ub) ** 2).sum())) / ref


@dataclass
class SweepRow:
    re: float
    tau: float
    steps: int
    mean_epsilon: float
    max_epsilon: float
    leakage: float
    flagged: bool = False
    reason: str = ""
    series: list[float] = field(default_factory=list)


def _diverged(f: np.ndarray) -> bool:
    return not np.all(np.isfinite(f)) or bool(np.any(lb.density(f) <= 0))


def side_by_side(
    cfg: LatticeConfig,
    ccfg: CarlemanConfig,
    f0: np.ndarray,
    steps: int,
) -> tuple[list[float], float]:
    """March LB and Carleman from ``f0``.

    Returns ``eps[t]`` for t = 0..steps and the accumulated window leakage.
    """
    f = f0
    eps = [deviation_epsilon(f0, f0)]
    leaked = 0.0
    for t, F1, leaked in march(f0, cfg, ccfg, steps):
        f = lb.lbm_step(f, cfg)
        if _diverged(F1):
            raise BlowUpError(f"Carleman state diverged at step {t}", step=t)
        if _diverged(f):
            raise BlowUpError(f"lattice Boltzmann run diverged at step {t}", step=t)
        eps.append(deviation_epsilon(F1, f))
    return eps, leaked


def mean_epsilon(eps: list[float]) -> float:
    """Mean over records taken after each step (the t = 0 record is excluded)."""
    tail = eps[1:]
    return float(np.mean(tail)) if tail else math.nan


def run_sweep_row(
    nx: int,
    ny: int,
    u0: float,
    n_modes: int,
    ccfg: CarlemanConfig,
    steps: int,
    *,
    re: float | None = None,
    tau: float | None = None,
    noise: float = 0.0,
    seed: int = 0,
) -> SweepRow:
    """One side-by-side run; ``noise`` multiplies f0 by ``1 + noise * N(0, 1)`` (seeded)."""
    if (re is None) == (tau is None):
        raise DomainError("give exactly one of re or tau")
    if tau is None:
        cfg = LatticeConfig.from_reynolds(nx, ny, u0, re)
    else:
        cfg = LatticeConfig(nx, ny, tau)
        re = cfg.reynolds(u0)
    f0 = lb.init_kolmogorov(cfg, u0, n_modes)
    if noise:
        f0 = f0 * (1.0 + noise * np.random.default_rng(seed).standard_normal(f0.shape))
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            eps, leaked = side_by_side(cfg, ccfg, f0, steps)
    except BlowUpError as exc:
        return SweepRow(re, cfg.tau, steps, math.nan, math.nan, math.nan, True, str(exc))
    return SweepRow(
        re=re,
        tau=cfg.tau,
        steps=steps,
        mean_epsilon=mean_epsilon(eps),
        max_epsilon=float(max(eps)),
        leakage=leaked,
        series=eps,
    )


def reynolds_sweep(
    re_list,
    nx: int,
    ny: int,
    u0: float,
    ccfg: CarlemanConfig,
    steps: int,
    n_modes: int = 1,
    threads: int = 1,
    noise: float = 0.0,
    seed: int = 0,
) -> list[SweepRow]:
    """Time-mean Carleman deviation for each Reynolds number, tau varied at fixed u0."""
    jobs = [dict(re=float(r), noise=noise, seed=seed) for r in re_list]
    return _run_rows(jobs, nx, ny, u0, n_modes, ccfg, steps, threads)


def tau_sweep(
    tau_list, nx, ny, u0, ccfg, steps, n_modes=1, threads=1, noise=0.0, seed=0
) -> list[SweepRow]:
    jobs = [dict(tau=float(t), noise=noise, seed=seed) for t in tau_list]
    return _run_rows(jobs, nx, ny, u0, n_modes, ccfg, steps, threads)


def _run_rows(jobs, nx, ny, u0, n_modes, ccfg, steps, threads):
    # rows are independent; results keep the input order whatever the thread count
    def one(kw):
        return run_sweep_row(nx, ny, u0, n_modes, ccfg, steps, **kw)

    if threads <= 1 or len(jobs) <= 1:
        return [one(kw) for kw in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, jobs))
