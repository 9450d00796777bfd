"""Reference D2Q9 BGK lattice Boltzmann solver on a doubly periodic grid.

Populations are stored as float64 arrays of shape ``(9, nx, ny)``, indexed
``f[i, x, y]``. All operations are pure: they return new arrays and never
modify their inputs.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BlowUpError, DomainError

log = logging.getLogger(__name__)

Q = 9


@dataclass(frozen=True)
class VelocitySet:
    vectors: np.ndarray
    weights: tuple[Fraction, ...]
    sound_speed_sq: Fraction

    @property
    def w(self) -> np.ndarray:
        return np.array([float(x) for x in self.weights])

    @property
    def cs2(self) -> float:
        return float(self.sound_speed_sq)


D2Q9 = VelocitySet(
    vectors=np.array(
        [(0, 0), (1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, 1), (-1, -1), (1, -1)],
        dtype=np.int64,
    ),
    weights=(Fraction(4, 9),) + (Fraction(1, 9),) * 4 + (Fraction(1, 36),) * 4,
    sound_speed_sq=Fraction(1, 3),
)

C = D2Q9.vectors
W = D2Q9.w
CS2 = D2Q9.cs2
# index of -c_i
OPPOSITE = np.array([0, 3, 4, 1, 2, 7, 8, 5, 6])


@dataclass(frozen=True)
class LatticeConfig:
    nx: int
    ny: int
    tau: float

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise DomainError(f"grid must be positive, got {self.nx}x{self.ny}")
        if not self.tau > 0.5:
            raise DomainError(f"tau must exceed 1/2 for positive viscosity, got {self.tau}")

    @property
    def nu(self) -> float:
        """Kinematic viscosity in lattice units."""
        return CS2 * (self.tau - 0.5)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (Q, self.nx, self.ny)

    def reynolds(self, u0: float) -> float:
        return u0 * self.ny / self.nu

    @classmethod
    def from_reynolds(cls, nx: int, ny: int, u0: float, re: float) -> "LatticeConfig":
        """Pick tau so that ``u0 * ny / nu == re`` at fixed velocity and grid."""
        if re <= 0 or u0 <= 0:
            raise DomainError("Reynolds number and u0 must be positive")
        nu = u0 * ny / re
        return cls(nx, ny, 0.5 + nu / CS2)


@dataclass(frozen=True)
class MacroFields:
    rho: np.ndarray
    u: np.ndarray  # shape (2, nx, ny)


def check_field(f: np.ndarray, cfg: LatticeConfig) -> None:
    if f.shape != cfg.shape:
        raise DomainError(f"field shape {f.shape} does not match config {cfg.shape}")


def density(f: np.ndarray) -> np.ndarray:
    return f.sum(axis=0)


def momentum(f: np.ndarray) -> np.ndarray:
    """Sum_i c_i f_i, shape ``(2, ...)``."""
    return np.tensordot(C.T.astype(float), f, axes=(1, 0))


def macroscopic(f: np.ndarray) -> MacroFields:
    rho = density(f)
    return MacroFields(rho=rho, u=momentum(f) / rho)


def equilibrium(rho, u) -> np.ndarray:
    """Second-order D2Q9 equilibrium.

    ``rho`` is a scalar or array of shape ``S``; ``u`` has shape ``(2,) + S``.
    Returns an array of shape ``(9,) + S``.
    """
    rho = np.asarray(rho, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.any(rho <= 0):
        raise DomainError("equilibrium requires rho > 0")
    cu = np.tensordot(C.astype(float), u, axes=(1, 0))
    usq = (u * u).sum(axis=0)
    wr = W.reshape((Q,) + (1,) * rho.ndim) * rho
    return wr * (1.0 + cu / CS2 + cu * cu / (2 * CS2 * CS2) - usq / (2 * CS2))


def collide(f: np.ndarray, cfg: LatticeConfig) -> np.ndarray:
    check_field(f, cfg)
    rho = density(f)
    bad = ~(rho > 0)
    if bad.any():
        x, y = (int(v) for v in np.argwhere(bad)[0])
        raise BlowUpError(f"non-positive density {rho[x, y]!r} at site ({x}, {y})", site=(x, y))
    feq = equilibrium(rho, momentum(f) / rho)
    return f - (f - feq) / cfg.tau


def stream(f: np.ndarray, cfg: LatticeConfig) -> np.ndarray:
    """Move f_i(x) to f_i(x + c_i) with periodic wrap."""
    check_field(f, cfg)
    out = np.empty_like(f)
    for i, (cx, cy) in enumerate(C):
        out[i] = np.roll(f[i], (cx, cy), axis=(0, 1))
    return out


def lbm_step(f: np.ndarray, cfg: LatticeConfig) -> np.ndarray:
    return stream(collide(f, cfg), cfg)


def run(f: np.ndarray, cfg: LatticeConfig, steps: int) -> np.ndarray:
    for _ in range(steps):
        f = lbm_step(f, cfg)
    return f


def kinetic_energy(f: np.ndarray) -> float:
    m = macroscopic(f)
    return float(0.5 * (m.rho * (m.u * m.u).sum(axis=0)).sum())


def shear_velocity(cfg: LatticeConfig, u0: float, n_modes: int) -> np.ndarray:
    y = np.arange(cfg.ny)
    ux = u0 * np.sin(2 * np.pi * n_modes * y / cfg.ny)
    u = np.zeros((2, cfg.nx, cfg.ny))
    u[0] = ux[None, :]
    return u


def init_taylor_green(cfg: LatticeConfig, u0: float) -> np.ndarray:
    """Equilibrium Taylor-Green vortex with its incompressible pressure in rho.

    The density perturbation is O(Ma^2), which is what exercises the
    unit-density closure of the Carleman collision.
    """
    kx = 2 * np.pi / cfg.nx
    ky = 2 * np.pi / cfg.ny
    x = np.arange(cfg.nx)[:, None]
    y = np.arange(cfg.ny)[None, :]
    u = np.empty((2, cfg.nx, cfg.ny))
    u[0] = u0 * np.cos(kx * x) * np.sin(ky * y)
    u[1] = -u0 * (kx / ky) * np.sin(kx * x) * np.cos(ky * y)
    p = -0.25 * u0 * u0 * (np.cos(2 * kx * x) + (kx / ky) ** 2 * np.cos(2 * ky * y))
    return equilibrium(1.0 + p / CS2, u)


def init_kolmogorov(cfg: LatticeConfig, u0: float, n_modes: int = 1) -> np.ndarray:
    """Unit-density equilibrium carrying the shear ``u_x = u0 sin(2 pi n y / ny)``."""
    if n_modes < 1:
        raise DomainError("n_modes must be a positive integer")
    mach = abs(u0) / math.sqrt(CS2)
    if mach > 0.3:
        log.warning("Mach number %.3f exceeds the low-Mach limit 0.3", mach)
    return equilibrium(np.ones((cfg.nx, cfg.ny)), shear_velocity(cfg, u0, n_modes))
