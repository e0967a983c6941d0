"""Seeded noise, ensembles of trajectories and mergeable moment statistics.

Reproducibility rules:

* path ``i`` of a run is driven by its own generator seeded with
  ``derive_path_seed(base_seed, i)``, so any path can be replayed alone;
* paths are integrated in fixed blocks of ``block_size`` and block results
  are merged in index order by a fixed tree, so the result does not depend on
  how many worker processes computed the blocks.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analytics import (
    FirstMoments,
    Regime,
    SecondMoments,
    first_moments,
    second_moments_ode,
)
from .core import BlochVector, TimeGrid
from .dynamics import AlphaModel, ConstantAlpha
from .integrators import KERNELS, DegenerateStateError, Scheme

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
RNG_ALGORITHM = "numpy.random.PCG64 / Generator.standard_normal (ziggurat)"
SEED_DERIVATION = "splitmix64(base_seed + (index + 1) * 0x9E3779B97F4A7C15 mod 2^64)"
NOISE_CHUNK = 2048


class EnsembleError(RuntimeError):
    def __init__(self, message, path_index):
        super().__init__(message)
        self.path_index = path_index


def _mix64(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK64
    return z ^ (z >> 31)


def derive_path_seed(base_seed: int, path_index: int) -> int:
    """64-bit seed for one path; a bijection in either argument with the other fixed."""
    return _mix64((base_seed + (path_index + 1) * GOLDEN_GAMMA) & MASK64)


def _generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class NoisePath:
    seed: int
    dt: float
    increments: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.increments)

    @property
    def brownian(self) -> np.ndarray:
        """w(t_k), starting from w(0) = 0."""
        return np.concatenate([[0.0], np.cumsum(self.increments)])


def brownian_path(seed: int, dt: float, n: int) -> NoisePath:
    if not dt > 0:
        raise ValueError("dt must be positive")
    if n < 1:
        raise ValueError("need at least one increment")
    return NoisePath(seed, dt, _generator(seed).standard_normal(n) * math.sqrt(dt))


@dataclass(frozen=True)
class RunConfig:
    alpha: AlphaModel
    beta: float
    b0: BlochVector
    grid: TimeGrid
    scheme: Scheme = Scheme.ROTATION
    n_paths: int = 1
    base_seed: int = 0
    block_size: int = 1024

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")
        if not 0 <= self.base_seed <= MASK64:
            raise ValueError("base_seed must be a 64-bit unsigned integer")
        if abs(self.b0.norm() - 1) > 1e-9:
            raise ValueError(f"b0 must be a pure state, |b0| = {self.b0.norm()}")
        object.__setattr__(self, "scheme", Scheme(self.scheme))

    def path_noise(self, index: int) -> NoisePath:
        return brownian_path(derive_path_seed(self.base_seed, index), self.grid.dt,
                             self.grid.n_steps)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha.describe(),
            "beta": self.beta,
            "b0": [self.b0.x, self.b0.y, self.b0.z],
            "grid": {"t0": self.grid.t0, "dt": self.grid.dt, "n_steps": self.grid.n_steps},
            "scheme": self.scheme.value,
            "n_paths": self.n_paths,
            "base_seed": self.base_seed,
            "block_size": self.block_size,
        }


@dataclass
class EnsembleStats:
    """Per-grid-point sums of x, y, z and their relevant products."""

    grid: TimeGrid
    n: int
    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray
    sxx: np.ndarray
    syy: np.ndarray
    szz: np.ndarray
    syz: np.ndarray

    FIELDS = ("sx", "sy", "sz", "sxx", "syy", "szz", "syz")

    @classmethod
    def empty(cls, grid: TimeGrid) -> "EnsembleStats":
        n = grid.n_steps + 1
        return cls(grid, 0, *(np.zeros(n) for _ in cls.FIELDS))

    def _avg(self, s):
        if self.n == 0:
            raise ValueError("no paths aggregated")
        return s / self.n

    mean_x = property(lambda self: self._avg(self.sx))
    mean_y = property(lambda self: self._avg(self.sy))
    mean_z = property(lambda self: self._avg(self.sz))
    xx = property(lambda self: self._avg(self.sxx))
    yy = property(lambda self: self._avg(self.syy))
    zz = property(lambda self: self._avg(self.szz))
    yz = property(lambda self: self._avg(self.syz))

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def variance(self, component: str) -> np.ndarray:
        """Population variance of x, y or z across paths."""
        mean = getattr(self, f"mean_{component}")
        second = getattr(self, component * 2)
        return np.maximum(second - mean * mean, 0.0)

    def stderr(self, component: str) -> np.ndarray:
        if self.n < 2:
            return np.full(self.grid.n_steps + 1, np.inf)
        return np.sqrt(self.variance(component) / (self.n - 1))

    def first(self) -> FirstMoments:
        return FirstMoments(self.mean_x, self.mean_y, self.mean_z)

    def second(self) -> SecondMoments:
        return SecondMoments(zz=self.zz, yy=self.yy, yz=self.yz)

    def table(self) -> np.ndarray:
        """Columns t, mx, my, mz, xx, yy, zz, yz."""
        return np.column_stack([self.times, self.mean_x, self.mean_y, self.mean_z,
                                self.xx, self.yy, self.zz, self.yz])


def merge_stats(a: EnsembleStats, b: EnsembleStats) -> EnsembleStats:
    if a.grid != b.grid:
        raise ValueError(f"cannot merge statistics on different grids: {a.grid} vs {b.grid}")
    return EnsembleStats(a.grid, a.n + b.n,
                         *(getattr(a, f) + getattr(b, f) for f in EnsembleStats.FIELDS))


def _tree_merge(parts):
    if len(parts) == 1:
        return parts[0]
    mid = len(parts) // 2
    return merge_stats(_tree_merge(parts[:mid]), _tree_merge(parts[mid:]))


def _run_block(config: RunConfig, start: int, stop: int, keep_final: bool):
    grid = config.grid
    kernel = KERNELS[config.scheme]
    gens = [_generator(derive_path_seed(config.base_seed, i)) for i in range(start, stop)]
    n_paths = stop - start
    sqrt_dt = math.sqrt(grid.dt)

    x = np.full(n_paths, config.b0.x)
    y = np.full(n_paths, config.b0.y)
    z = np.full(n_paths, config.b0.z)
    stats = EnsembleStats.empty(grid)
    stats.n = n_paths

    def record(k, X, Y, Z):
        stats.sx[k] = X.sum(axis=-1)
        stats.sy[k] = Y.sum(axis=-1)
        stats.sz[k] = Z.sum(axis=-1)
        stats.sxx[k] = (X * X).sum(axis=-1)
        stats.syy[k] = (Y * Y).sum(axis=-1)
        stats.szz[k] = (Z * Z).sum(axis=-1)
        stats.syz[k] = (Y * Z).sum(axis=-1)

    record(0, x, y, z)
    for c0 in range(0, grid.n_steps, NOISE_CHUNK):
        m = min(NOISE_CHUNK, grid.n_steps - c0)
        dW = np.empty((m, n_paths))
        for j, g in enumerate(gens):
            dW[:, j] = g.standard_normal(m) * sqrt_dt
        X, Y, Z = (np.empty((m, n_paths)) for _ in range(3))
        for i in range(m):
            try:
                x, y, z = kernel(x, y, z, grid.dt, dW[i], config.alpha, config.beta)
            except DegenerateStateError as exc:
                idx = start + int(exc.indices[0])
                raise EnsembleError(f"path {idx}: {exc} (step {c0 + i})", idx) from exc
            X[i], Y[i], Z[i] = x, y, z
        record(slice(c0 + 1, c0 + m + 1), X, Y, Z)
    final = np.column_stack([x, y, z]) if keep_final else None
    return stats, final


def _block_task(args):
    return _run_block(*args)


def _blocks(start, stop, size):
    return [(s, min(s + size, stop)) for s in range(start, stop, size)]


def run_path_range(config: RunConfig, start: int, stop: int, workers: int = 1,
                   return_final: bool = False):
    """Aggregate paths ``start <= i < stop`` of ``config``."""
    if not 0 <= start < stop:
        raise ValueError("need 0 <= start < stop")
    tasks = [(config, s, e, return_final) for s, e in _blocks(start, stop, config.block_size)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_block_task, tasks))
    else:
        results = [_block_task(t) for t in tasks]
    stats = _tree_merge([r[0] for r in results])
    if return_final:
        return stats, np.concatenate([r[1] for r in results])
    return stats


def run_ensemble(config: RunConfig, workers: int = 1, return_final: bool = False):
    """Integrate ``config.n_paths`` paths and aggregate their moments.

    With ``return_final`` also returns the (n_paths, 3) array of terminal states.
    """
    return run_path_range(config, 0, config.n_paths, workers, return_final)


@dataclass(frozen=True)
class ErrorReport:
    times: np.ndarray
    regime: Regime
    reference_first: FirstMoments
    reference_second: SecondMoments
    mean_error: np.ndarray    # |<x>,<y>,<z> - reference|, shape (n+1, 3)
    second_error: np.ndarray  # xx, yy, zz, yz, shape (n+1, 4)

    @property
    def max_mean_error(self) -> float:
        return float(self.mean_error.max())

    @property
    def mean_mean_error(self) -> float:
        return float(self.mean_error.mean())

    @property
    def max_second_error(self) -> float:
        return float(self.second_error.max())

    @property
    def mean_second_error(self) -> float:
        return float(self.second_error.mean())


def compare_to_analytic(stats: EnsembleStats, alpha, beta: float, b0) -> ErrorReport:
    """Errors of ensemble moments against the constant-alpha reference curves."""
    if isinstance(alpha, AlphaModel):
        if not isinstance(alpha, ConstantAlpha):
            raise ValueError("no analytic reference exists for a state-dependent alpha")
        alpha = alpha.alpha0
    if not isinstance(b0, BlochVector):
        b0 = BlochVector.from_array(b0)
    first, regime = first_moments(stats.grid, b0, alpha, beta)
    second = second_moments_ode(stats.grid, SecondMoments.of_pure_state(b0), alpha, beta)
    mean_err = np.abs(stats.first().as_array() - first.as_array())
    sec_err = np.abs(np.column_stack([
        stats.xx - second.xx, stats.yy - second.yy, stats.zz - second.zz, stats.yz - second.yz,
    ]))
    return ErrorReport(stats.times, regime, first, second, mean_err, sec_err)
