"""Bloch-vector and density-matrix representations of a two-level state."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# absolute slack for physicality checks (norm, trace, hermiticity)
PHYS_TOL = 1e-9


class UnphysicalStateError(ValueError):
    """Raised when a state lies outside the Bloch ball or is not a density matrix."""


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    @classmethod
    def from_array(cls, a) -> "BlochVector":
        a = np.asarray(a, dtype=float)
        if a.shape != (3,):
            raise ValueError(f"expected a 3-vector, got shape {a.shape}")
        return cls(float(a[0]), float(a[1]), float(a[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def norm(self) -> float:
        return float(np.sqrt(purity(self)))

    def __iter__(self):
        return iter((self.x, self.y, self.z))


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_k = t0 + k*dt`` for ``k = 0..n_steps``."""

    dt: float
    n_steps: int
    t0: float = 0.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError(f"n_steps must be an integer >= 1, got {self.n_steps}")

    @classmethod
    def spanning(cls, t_max: float, dt: float, t0: float = 0.0) -> "TimeGrid":
        return cls(dt=dt, n_steps=int(round((t_max - t0) / dt)), t0=t0)

    @property
    def times(self) -> np.ndarray:
        # k*dt rather than a running sum, so late times carry no accumulated error
        return self.t0 + self.dt * np.arange(self.n_steps + 1)

    @property
    def t_max(self) -> float:
        return self.t0 + self.dt * self.n_steps

    def index_of(self, t: float) -> int:
        k = int(round((t - self.t0) / self.dt))
        if not 0 <= k <= self.n_steps:
            raise ValueError(f"t={t} lies outside the grid [{self.t0}, {self.t_max}]")
        return k


def _xyz(b):
    if isinstance(b, BlochVector):
        return b.x, b.y, b.z
    x, y, z = np.asarray(b, dtype=float)
    return float(x), float(y), float(z)


def purity(b) -> float:
    """Squared Bloch norm; 1 for pure states, 0 for the maximally mixed state."""
    x, y, z = _xyz(b)
    return x * x + y * y + z * z


def density_from_bloch(b) -> np.ndarray:
    x, y, z = _xyz(b)
    if np.sqrt(x * x + y * y + z * z) > 1 + PHYS_TOL:
        raise UnphysicalStateError(f"Bloch vector {(x, y, z)} lies outside the unit ball")
    return 0.5 * np.array([[1 + z, x - 1j * y], [x + 1j * y, 1 - z]], dtype=complex)


def bloch_from_density(rho) -> BlochVector:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise UnphysicalStateError(f"expected a 2x2 matrix, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > PHYS_TOL:
        raise UnphysicalStateError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > PHYS_TOL:
        raise UnphysicalStateError(f"density matrix has trace {np.trace(rho).real}, not 1")
    off = rho[1, 0]
    return BlochVector(2 * off.real, 2 * off.imag, (rho[0, 0] - rho[1, 1]).real)
