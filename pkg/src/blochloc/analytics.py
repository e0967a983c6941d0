"""Ensemble-averaged moments of the constant-alpha model.

Averaging the Ito equations gives closed linear systems for the first
moments <x>, <y>, <z> and, using x^2 + y^2 + z^2 = 1, for the second moments
<z^2>, <y^2>, <yz>.  The first-moment system has closed-form solutions away
from the critical line beta^2 = 2|alpha|; both systems are also integrated
numerically with classical RK4, which covers every regime.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import BlochVector, TimeGrid, density_from_bloch

CRITICAL_TOL = 1e-12
ODE_MAX_STEP = 1e-4


class Regime(str, enum.Enum):
    UNDERDAMPED = "underdamped"
    OVERDAMPED = "overdamped"
    CRITICAL = "critical"


class CriticalRegimeError(ValueError):
    """The closed forms divide by omega = 0 on the critical line."""


@dataclass(frozen=True)
class FirstMoments:
    mean_x: np.ndarray
    mean_y: np.ndarray
    mean_z: np.ndarray

    def as_array(self) -> np.ndarray:
        return np.stack([self.mean_x, self.mean_y, self.mean_z], axis=-1)


@dataclass(frozen=True)
class SecondMoments:
    zz: np.ndarray
    yy: np.ndarray
    yz: np.ndarray

    @property
    def xx(self):
        return 1.0 - self.yy - self.zz

    @classmethod
    def of_pure_state(cls, b) -> "SecondMoments":
        x, y, z = b
        return cls(zz=z * z, yy=y * y, yz=y * z)


def classify_regime(alpha: float, beta: float) -> Regime:
    if alpha == 0 and beta == 0:
        raise ValueError("alpha = beta = 0: no dynamics, regime undefined")
    gap = beta * beta - 2 * abs(alpha)
    if abs(gap) <= CRITICAL_TOL:
        return Regime.CRITICAL
    return Regime.UNDERDAMPED if gap < 0 else Regime.OVERDAMPED


def _xyz(b0):
    if isinstance(b0, BlochVector):
        return b0.x, b0.y, b0.z
    x, y, z = b0
    return float(x), float(y), float(z)


def first_moments_closed_form(t, b0, alpha: float, beta: float) -> FirstMoments:
    regime = classify_regime(alpha, beta)
    if regime is Regime.CRITICAL:
        raise CriticalRegimeError(
            f"beta^2 = 2|alpha| (alpha={alpha}, beta={beta}); use first_moments_ode")
    x0, y0, z0 = _xyz(b0)
    t = np.asarray(t, dtype=float)
    b2 = beta * beta
    omega = math.sqrt(abs(b2 * b2 - 4 * alpha * alpha))
    c1 = (-b2 * y0 - 2 * alpha * z0) / omega
    c2 = (b2 * z0 + 2 * alpha * y0) / omega
    if regime is Regime.UNDERDAMPED:
        damp = np.exp(-b2 * t)
        ev, od = damp * np.cos(omega * t), damp * np.sin(omega * t)
    else:
        # e^{-b2 t} cosh, e^{-b2 t} sinh as two decaying exponentials, no overflow
        fast, slow = np.exp(-(b2 + omega) * t), np.exp(-(b2 - omega) * t)
        ev, od = 0.5 * (slow + fast), 0.5 * (slow - fast)
    return FirstMoments(
        mean_x=np.exp(-2 * b2 * t) * x0,
        mean_y=y0 * ev + c1 * od,
        mean_z=z0 * ev + c2 * od,
    )


def _rk4_affine(matrix, offset, v0, grid: TimeGrid, max_step: float) -> np.ndarray:
    """Classical RK4 for v' = matrix @ v + offset, sampled on ``grid``.

    For an autonomous affine system one RK4 step of size h is exactly the
    degree-4 Taylor polynomial of exp(h A) applied to the augmented state, so
    the step map is formed once and reused.
    """
    n = len(v0)
    aug = np.zeros((n + 1, n + 1))
    aug[:n, :n] = matrix
    aug[:n, n] = offset
    sub = max(1, math.ceil(grid.dt / max_step - 1e-9))
    hA = (grid.dt / sub) * aug
    hA2 = hA @ hA
    step = np.eye(n + 1) + hA + hA2 / 2 + hA2 @ hA / 6 + hA2 @ hA2 / 24
    prop = np.linalg.matrix_power(step, sub)
    out = np.empty((grid.n_steps + 1, n + 1))
    out[0, :n] = v0
    out[0, n] = 1.0
    for k in range(grid.n_steps):
        out[k + 1] = prop @ out[k]
    return out[:, :n]


def first_moments_ode(grid: TimeGrid, b0, alpha: float, beta: float,
                      max_step: float = ODE_MAX_STEP) -> FirstMoments:
    b2 = beta * beta
    m = np.array([[-2 * b2, 0, 0], [0, -2 * b2, -2 * alpha], [0, 2 * alpha, 0]], dtype=float)
    v = _rk4_affine(m, np.zeros(3), np.array(_xyz(b0)), grid, max_step)
    return FirstMoments(v[:, 0], v[:, 1], v[:, 2])


def first_moments(grid: TimeGrid, b0, alpha: float, beta: float) -> tuple[FirstMoments, Regime]:
    """Reference first-moment curves: closed form, or RK4 on the critical line."""
    regime = classify_regime(alpha, beta)
    if regime is Regime.CRITICAL:
        return first_moments_ode(grid, b0, alpha, beta), regime
    return first_moments_closed_form(grid.times, b0, alpha, beta), regime


def second_moments_ode(grid: TimeGrid, init: SecondMoments, alpha: float, beta: float,
                       max_step: float = ODE_MAX_STEP) -> SecondMoments:
    b2 = beta * beta
    # state (zz, yy, yz), with <x^2> eliminated as 1 - yy - zz
    m = np.array([
        [0.0, 0.0, 4 * alpha],
        [-4 * b2, -8 * b2, -4 * alpha],
        [-2 * alpha, 2 * alpha, -2 * b2],
    ])
    c = np.array([0.0, 4 * b2, 0.0])
    v0 = np.array([init.zz, init.yy, init.yz], dtype=float)
    v = _rk4_affine(m, c, v0, grid, max_step)
    return SecondMoments(zz=v[:, 0], yy=v[:, 1], yz=v[:, 2])


def second_moments_rhs(m: SecondMoments, alpha: float, beta: float) -> tuple:
    b2 = beta * beta
    xx = 1.0 - m.yy - m.zz
    return (
        4 * alpha * m.yz,
        -4 * alpha * m.yz - 4 * b2 * m.yy + 4 * b2 * xx,
        -2 * b2 * m.yz + 2 * alpha * m.yy - 2 * alpha * m.zz,
    )


def stationary_second_moments() -> SecondMoments:
    return SecondMoments(zz=1 / 3, yy=1 / 3, yz=0.0)


def slow_relaxation_rate(alpha: float, beta: float) -> float:
    """Magnitude of the slower eigenvalue of the (<y>, <z>) system.

    Only meaningful without oscillation, i.e. overdamped or critical.
    """
    regime = classify_regime(alpha, beta)
    b2 = beta * beta
    if regime is Regime.CRITICAL:
        return b2
    if regime is Regime.UNDERDAMPED:
        raise ValueError(f"alpha={alpha}, beta={beta} is underdamped; relaxation is oscillatory")
    # b2 - sqrt(b2^2 - 4 a^2) without the cancellation
    return 4 * alpha * alpha / (b2 + math.sqrt(b2 * b2 - 4 * alpha * alpha))


def decoherence_limit() -> np.ndarray:
    return density_from_bloch((0.0, 0.0, 0.0))
