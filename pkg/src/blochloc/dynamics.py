"""Tunnelling-amplitude models and the Ito drift/diffusion fields.

In Ito form the noisy equations of motion read

    dx = -2 b^2 x dt               - 2 b y dW
    dy = -2 b^2 y dt - 2 a(z) z dt + 2 b x dW
    dz =              2 a(z) y dt

i.e. a rotation about the x axis at rate 2 a(z) plus a random rotation about
the z axis, the -2 b^2 terms being the Ito correction of the latter.

All field functions accept a single state (``BlochVector`` or length-3
sequence) or a stack of states with shape ``(..., 3)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import BlochVector

Z_CLAMP_TOL = 1e-9
# z-grid used when validating a user supplied profile
_VALIDATION_GRID = np.linspace(-1.0, 1.0, 2001)


class AlphaModel:
    """Tunnelling amplitude as a function of z only."""

    name = "alpha"

    def __call__(self, z):
        raise NotImplementedError

    @property
    def fixes_poles(self) -> bool:
        return bool(self(1.0) == 0.0 and self(-1.0) == 0.0)

    def describe(self) -> dict:
        return {"model": self.name}


@dataclass(frozen=True)
class ConstantAlpha(AlphaModel):
    alpha0: float
    name = "constant"

    def __call__(self, z):
        if np.ndim(z) == 0:
            return float(self.alpha0)
        return np.full(np.shape(z), float(self.alpha0))

    def describe(self) -> dict:
        return {"model": self.name, "alpha0": self.alpha0}


@dataclass(frozen=True)
class PolynomialEvenAlpha(AlphaModel):
    """alpha(z) = alpha0 * (1 - z^2): even in z and zero at both poles."""

    alpha0: float
    name = "polynomial_even"

    def __call__(self, z):
        z = np.clip(z, -1.0, 1.0)
        return self.alpha0 * (1.0 - z * z)

    def describe(self) -> dict:
        return {"model": self.name, "alpha0": self.alpha0}


@dataclass(frozen=True)
class CustomAlpha(AlphaModel):
    """User profile, checked on a z-grid for evenness and vanishing at the poles.

    ``profile`` must be vectorised over numpy arrays.
    """

    profile: Callable = field(repr=False)
    name: str = "custom"
    tol: float = 1e-12

    def __post_init__(self):
        z = _VALIDATION_GRID
        a = np.asarray(self.profile(z), dtype=float)
        if a.shape != z.shape or not np.all(np.isfinite(a)):
            raise ValueError(f"alpha profile {self.name!r} must return finite values per z")
        if np.max(np.abs(a - a[::-1])) > self.tol:
            raise ValueError(f"alpha profile {self.name!r} is not even in z")
        if abs(a[0]) > self.tol or abs(a[-1]) > self.tol:
            raise ValueError(f"alpha profile {self.name!r} does not vanish at the poles")
        if np.any(a[1:-1] <= 0):
            raise ValueError(f"alpha profile {self.name!r} must be positive away from the poles")

    def __call__(self, z):
        out = self.profile(np.clip(z, -1.0, 1.0))
        return float(out) if np.ndim(z) == 0 else np.asarray(out, dtype=float)


_REGISTRY: dict[str, AlphaModel] = {}


def register_alpha(name: str, profile: Callable) -> CustomAlpha:
    """Validate ``profile`` and make it available under ``name``."""
    model = CustomAlpha(profile, name=name)
    _REGISTRY[name] = model
    return model


def get_alpha(name: str) -> AlphaModel:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"no alpha profile registered as {name!r}") from None


def eval_alpha(model: AlphaModel, z):
    """alpha(z) with z clamped to [-1, 1] first."""
    return model(np.clip(z, -1.0, 1.0))


def _split(b):
    if isinstance(b, BlochVector):
        return b.x, b.y, b.z
    b = np.asarray(b, dtype=float)
    return b[..., 0], b[..., 1], b[..., 2]


def ito_drift(b, model: AlphaModel, beta: float) -> np.ndarray:
    x, y, z = _split(b)
    a = eval_alpha(model, z)
    b2 = beta * beta
    return np.stack([-2 * b2 * x, -2 * b2 * y - 2 * a * z, 2 * a * y], axis=-1)


def ito_diffusion(b, beta: float) -> np.ndarray:
    x, y, z = _split(b)
    return np.stack([-2 * beta * y, 2 * beta * x, np.zeros_like(z)], axis=-1)
