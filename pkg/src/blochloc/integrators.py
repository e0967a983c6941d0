"""Time stepping of pure states on the Bloch sphere.

Two schemes are provided and each serves as a check on the other:

* ``Scheme.EULER`` -- Euler-Maruyama on the Ito equations, projected back to
  the unit sphere after every step.
* ``Scheme.ROTATION`` -- Lie-Trotter splitting into the two exact rotations of
  the Stratonovich picture: about x by ``2 alpha(z) dt`` (alpha frozen at the
  step's initial z), then about z by ``2 beta dW``.  No projection needed.

The steppers never draw random numbers; increments come in from the caller.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import BlochVector, TimeGrid
from .dynamics import AlphaModel, eval_alpha

DEGENERATE_NORM = 1e-12
HALF_PI = 0.5 * np.pi


class DegenerateStateError(ArithmeticError):
    """Raised when a state collapses to the origin and has no direction."""

    def __init__(self, message, indices=None):
        super().__init__(message)
        self.indices = indices


class Scheme(str, enum.Enum):
    EULER = "euler"
    ROTATION = "rotation"

    # long names used in the documentation
    EulerMaruyamaRenorm = "euler"
    RotationSplitting = "rotation"


@dataclass(frozen=True)
class Trajectory:
    grid: TimeGrid
    states: np.ndarray  # shape (n_steps + 1, 3)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def x(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def z(self) -> np.ndarray:
        return self.states[:, 2]

    def __len__(self):
        return len(self.states)

    def __getitem__(self, k) -> BlochVector:
        return BlochVector.from_array(self.states[k])


# -- vectorised kernels on separate component arrays ---------------------------

def _euler_kernel(x, y, z, dt, dW, model, beta):
    a = eval_alpha(model, z)
    b2 = beta * beta
    g = 2.0 * beta * dW
    nx = x - 2.0 * b2 * x * dt - g * y
    ny = y + (-2.0 * b2 * y - 2.0 * a * z) * dt + g * x
    nz = z + 2.0 * a * y * dt
    return _normalize(nx, ny, nz)


def _rotate(u, v, theta):
    """Rotate (u, v) by theta as three shears.

    Each shear has determinant exactly 1 whatever the rounding of tan/sin, so
    repeating the same angle does not pump the norm the way a rounded
    (cos, sin) pair does.
    """
    if np.any(np.abs(theta) > HALF_PI):
        # reduce to |theta| <= pi/2 so tan(theta/2) stays bounded
        theta = np.remainder(theta + np.pi, 2 * np.pi) - np.pi
        flip = np.abs(theta) > HALF_PI
        theta = np.where(flip, theta - np.copysign(np.pi, theta), theta)
        sign = np.where(flip, -1.0, 1.0)
        u, v = sign * u, sign * v
    t = np.tan(0.5 * theta)
    s = np.sin(theta)
    u = u - t * v
    v = v + s * u
    u = u - t * v
    return u, v


def _rotation_kernel(x, y, z, dt, dW, model, beta):
    y, z = _rotate(y, z, 2.0 * eval_alpha(model, z) * dt)
    if beta == 0.0:
        return x, y, z  # the noise rotation is the identity
    x, y = _rotate(x, y, 2.0 * beta * dW)
    return x, y, z


def _normalize(x, y, z):
    r = np.sqrt(x * x + y * y + z * z)
    bad = r < DEGENERATE_NORM
    if np.any(bad):
        raise DegenerateStateError(
            "state collapsed to the origin; cannot project to the sphere",
            indices=np.flatnonzero(bad),
        )
    return x / r, y / r, z / r


KERNELS = {Scheme.EULER: _euler_kernel, Scheme.ROTATION: _rotation_kernel}


# -- public single-step API ----------------------------------------------------

def _unpack(b):
    if isinstance(b, BlochVector):
        return b.x, b.y, b.z, True
    arr = np.asarray(b, dtype=float)
    return arr[..., 0], arr[..., 1], arr[..., 2], False


def _pack(x, y, z, as_vector):
    if as_vector:
        return BlochVector(float(x), float(y), float(z))
    return np.stack([x, y, z], axis=-1)


def _check_unit(x, y, z, tol):
    r = np.sqrt(x * x + y * y + z * z)
    if np.any(np.abs(r - 1.0) > tol):
        raise ValueError(f"state must lie on the unit sphere (|b| = {r})")


def renormalize(b):
    """Project ``b`` radially onto the unit sphere."""
    x, y, z, vec = _unpack(b)
    return _pack(*_normalize(x, y, z), vec)


def step_euler_maruyama(b, dt: float, dW, model: AlphaModel, beta: float):
    if not dt > 0:
        raise ValueError("dt must be positive")
    x, y, z, vec = _unpack(b)
    _check_unit(x, y, z, 1e-6)
    return _pack(*_euler_kernel(x, y, z, dt, dW, model, beta), vec)


def step_rotation_splitting(b, dt: float, dW, model: AlphaModel, beta: float):
    if not dt > 0:
        raise ValueError("dt must be positive")
    x, y, z, vec = _unpack(b)
    _check_unit(x, y, z, 1e-9)
    return _pack(*_rotation_kernel(x, y, z, dt, dW, model, beta), vec)


# -- whole paths ------------------------------------------------------------------

def integrate_batch(b0, grid: TimeGrid, increments, model: AlphaModel, beta: float,
                    scheme=Scheme.ROTATION) -> np.ndarray:
    """Integrate P paths sharing the model parameters.

    ``increments`` has shape (n_steps, P); ``b0`` is one state or a (P, 3)
    array of per-path states.  Returns states of shape (n_steps + 1, P, 3).
    """
    scheme = Scheme(scheme)
    kernel = KERNELS[scheme]
    dW = np.asarray(increments, dtype=float)
    if dW.ndim != 2 or dW.shape[0] != grid.n_steps:
        raise ValueError(f"increments must have shape ({grid.n_steps}, P), got {dW.shape}")
    n_paths = dW.shape[1]
    start = b0.as_array() if isinstance(b0, BlochVector) else np.asarray(b0, dtype=float)
    start = np.broadcast_to(start, (n_paths, 3))
    norms = np.linalg.norm(start, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-9):
        raise ValueError(f"initial state must be pure, |b0| = {norms.max()}")
    out = np.empty((grid.n_steps + 1, n_paths, 3))
    x, y, z = (start[:, i].copy() for i in range(3))
    out[0] = start
    dt = grid.dt
    for k in range(grid.n_steps):
        x, y, z = kernel(x, y, z, dt, dW[k], model, beta)
        out[k + 1, :, 0] = x
        out[k + 1, :, 1] = y
        out[k + 1, :, 2] = z
    return out


def integrate_path(b0, grid: TimeGrid, noise, model: AlphaModel, beta: float,
                   scheme=Scheme.ROTATION) -> Trajectory:
    """Integrate one path driven by ``noise`` (a NoisePath or an array of dW)."""
    dW = np.asarray(getattr(noise, "increments", noise), dtype=float)
    if dW.shape != (grid.n_steps,):
        raise ValueError(f"noise has {dW.size} increments, grid needs {grid.n_steps}")
    noise_dt = getattr(noise, "dt", None)
    if noise_dt is not None and not np.isclose(noise_dt, grid.dt, rtol=1e-12, atol=0):
        raise ValueError(f"noise drawn for dt={noise_dt}, grid has dt={grid.dt}")
    states = integrate_batch(b0, grid, dW[:, None], model, beta, scheme)
    return Trajectory(grid, states[:, 0, :])
