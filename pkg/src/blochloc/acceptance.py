"""End-to-end acceptance checks, shared by ``blochloc validate`` and the test suite.

Each check returns a :class:`CriterionResult`.  ``quick=True`` shrinks the
Monte Carlo ensembles; tolerances that are Monte Carlo error bands are then
widened by sqrt(n_full / n_quick) so the check keeps the same confidence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .analytics import (
    SecondMoments,
    first_moments_closed_form,
    second_moments_ode,
    slow_relaxation_rate,
    stationary_second_moments,
)
from .core import BlochVector, TimeGrid
from .dynamics import ConstantAlpha, PolynomialEvenAlpha
from .ensemble import RunConfig, derive_path_seed, brownian_path, run_ensemble
from .integrators import Scheme, integrate_batch, integrate_path
from .observables import (
    localization_average,
    meridian_flux,
    pole_occupancy,
    transition_count,
)

BASE_SEED = 1
POLE = BlochVector(0.0, 0.0, 1.0)
# delocalized start for the nonlinear runs: z = 0, equal weights on both poles
EQUATOR = BlochVector(0.0, 1.0, 0.0)
N_FULL = 20_000


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:>2}. {self.name}: {self.detail}"


class _Trace:
    """Collects sub-checks of one criterion."""

    def __init__(self):
        self.ok = True
        self.parts = []

    def check(self, label, value, cond, fmt=".3g"):
        self.ok &= bool(cond)
        self.parts.append(f"{label}={value:{fmt}}{'' if cond else ' (!)'}")

    def note(self, text):
        self.parts.append(text)

    def result(self, number, name):
        return CriterionResult(number, name, self.ok, "; ".join(self.parts))


def _n(quick, full=N_FULL, reduced=2_000):
    return reduced if quick else full


def _scale(quick, full=N_FULL, reduced=2_000):
    return math.sqrt(full / reduced) if quick else 1.0


@lru_cache(maxsize=None)
def _linear_ensemble(alpha, beta, t_max, dt, n_paths, seed=BASE_SEED, b0=POLE):
    cfg = RunConfig(ConstantAlpha(alpha), beta, b0, TimeGrid.spanning(t_max, dt),
                    Scheme.ROTATION, n_paths, seed)
    return run_ensemble(cfg)


def _underdamped(quick):
    # one run covers both the [0, 5] window and the decoherence time 20/beta^2
    return _linear_ensemble(1.0, 0.7, 20 / 0.49, 1e-3, _n(quick))


def _overdamped(quick):
    return _linear_ensemble(1.0, 2.0, 5.0, 1e-3, _n(quick))


def _max_dev(stats, alpha, beta, b0, t_max):
    k = stats.grid.index_of(t_max)
    ref = first_moments_closed_form(stats.times[: k + 1], b0, alpha, beta).as_array()
    return float(np.abs(stats.first().as_array()[: k + 1] - ref).max())


def underdamped_moments(quick=False):
    tr = _Trace()
    stats = _underdamped(quick)
    tol = 0.02 * _scale(quick)
    dev = _max_dev(stats, 1.0, 0.7, POLE, 5.0)
    tr.check("max|MC-closed form|", dev, dev <= tol)
    tr.note(f"tol={tol:.3g}, n={stats.n}")
    return tr.result(1, "underdamped first moments (alpha=1, beta=0.7)")


def overdamped_moments(quick=False):
    tr = _Trace()
    stats = _overdamped(quick)
    tol = 0.02 * _scale(quick)
    dev = _max_dev(stats, 1.0, 2.0, POLE, 5.0)
    tr.check("max|MC-closed form|", dev, dev <= tol)
    t = stats.times
    win = (t >= 1.0 - 1e-12) & (t <= 4.0 + 1e-12)
    mz = stats.mean_z[win]
    if np.all(mz > 0):
        rate = -np.polyfit(t[win], np.log(mz), 1)[0]
    else:
        rate = float("nan")
    expected = slow_relaxation_rate(1.0, 2.0)
    rel = abs(rate - expected) / expected
    tr.check("fitted rate", rate, rel <= 0.10, ".4f")
    tr.note(f"expected={expected:.4f}, rel.err={rel:.3g}, tol={tol:.3g}, n={stats.n}")
    return tr.result(2, "overdamped first moments and slow relaxation rate (alpha=1, beta=2)")


def decoherence_limit(quick=False):
    tr = _Trace()
    tol = 0.03 * _scale(quick)
    for beta, stats in ((0.7, _underdamped(quick)), (2.0, _overdamped(quick))):
        k = stats.grid.index_of(20 / beta ** 2)
        worst = max(abs(stats.mean_x[k]), abs(stats.mean_y[k]), abs(stats.mean_z[k]))
        tr.check(f"beta={beta}: max|<b>(20/beta^2)|", worst, worst <= tol)
        exact = first_moments_closed_form(np.array([stats.times[k]]), POLE, 1.0, beta)
        tr.note(f"closed form {np.abs(exact.as_array()).max():.3g}")
    tr.note(f"tol={tol:.3g}")
    return tr.result(3, "decoherence limit <b> -> 0")


def second_moment_stationarity(quick=False):
    tr = _Trace()
    stats = _linear_ensemble(1.0, 1.0, 10.0, 1e-3, _n(quick))
    tol = 0.02 * _scale(quick)
    for name in ("xx", "yy", "zz"):
        v = float(getattr(stats, name)[-1])
        tr.check(f"<{name}>", v, abs(v - 1 / 3) <= tol, ".4f")
    yz = float(stats.yz[-1])
    tr.check("<yz>", yz, abs(yz) <= tol, ".4f")
    ode = second_moments_ode(TimeGrid.spanning(10.0, 1e-3), SecondMoments.of_pure_state(POLE),
                             1.0, 1.0)
    diag = max(abs(float(getattr(ode, m)[-1]) - 1 / 3) for m in ("xx", "yy", "zz"))
    tr.check("ODE max|diag-1/3|", diag, diag <= 1e-6)
    tr.note(f"ODE yz(10)={float(ode.yz[-1]):.2g}; tol={tol:.3g}, n={stats.n}")
    return tr.result(4, "second-moment stationarity (alpha=1, beta=1, t=10)")


def norm_conservation(quick=False):
    tr = _Trace()
    grid = TimeGrid(1e-2, 100_000)
    noise = brownian_path(derive_path_seed(BASE_SEED, 0), grid.dt, grid.n_steps)
    for model in (ConstantAlpha(1.0), PolynomialEvenAlpha(1.0)):
        for scheme, tol in ((Scheme.ROTATION, 1e-12), (Scheme.EULER, 4 * np.finfo(float).eps)):
            traj = integrate_path(EQUATOR, grid, noise, model, 7.0, scheme)
            drift = float(np.abs(np.linalg.norm(traj.states, axis=1) - 1).max())
            tr.check(f"{model.name}/{scheme.value}", drift, drift <= tol)
    return tr.result(5, "norm conservation over 1e5 steps at beta=7")


def zero_noise_recurrence(quick=False):
    tr = _Trace()
    grid = TimeGrid.spanning(10 * math.pi, 1e-3)
    traj = integrate_path(POLE, grid, np.zeros(grid.n_steps), ConstantAlpha(1.0), 0.0,
                          Scheme.ROTATION)
    err = float(np.abs(traj.z - np.cos(2 * traj.times)).max())
    tr.check("max|z-cos(2t)|", err, err <= 1e-10)
    return tr.result(6, "zero-noise tunnelling recurrence over 10 periods")


def nonlinear_noiseless(quick=False):
    tr = _Trace()
    grid = TimeGrid.spanning(50.0, 1e-4)
    model = PolynomialEvenAlpha(1.0)
    starts = np.array([[0.5, 0.0, math.sqrt(0.75)], [0.0, 0.6, 0.8]])
    states = integrate_batch(starts, grid, np.zeros((grid.n_steps, 2)), model, 0.0,
                             Scheme.ROTATION)
    tilted, mer = states[:, 0, :], states[:, 1, :]
    dx = float(np.abs(tilted[:, 0] - 0.5).max())
    tr.check("max|x-x0|", dx, dx <= 1e-6)
    step_min = float(np.diff(mer[:, 2]).min())
    tr.check("min dz", step_min, step_min >= -1e-15)
    tr.check("z(50)", float(mer[-1, 2]), mer[-1, 2] > 0.99, ".6f")
    tr.check("max|x| on meridian", float(np.abs(mer[:, 0]).max()), np.all(mer[:, 0] == 0))
    return tr.result(7, "nonlinear noiseless motion (x conserved, meridian -> pole)")


def localization_runs(scheme, seeds=range(1, 21), steps=40_000, dt=1e-2):
    """Nonlinear paths at alpha0=1, beta=7, one per seed.

    Each matches ``blochloc simulate --nonlinear --seed s`` for the same scheme.
    """
    grid = TimeGrid(dt, steps)
    noise = np.column_stack([brownian_path(derive_path_seed(s, 0), dt, steps).increments
                             for s in seeds])
    states = integrate_batch(EQUATOR, grid, noise, PolynomialEvenAlpha(1.0), 7.0, scheme)

    class _Path:
        def __init__(self, s):
            self.times, self.x, self.y, self.z = grid.times, s[:, 0], s[:, 1], s[:, 2]

    return [_Path(states[:, j, :]) for j in range(states.shape[1])]


def localization(quick=False):
    tr = _Trace()
    for scheme in (Scheme.ROTATION, Scheme.EULER):
        paths = localization_runs(scheme)
        occ = np.median([pole_occupancy(p, 0.9) for p in paths])
        big_l = np.median([localization_average(p).values[-1] for p in paths])
        moved = sum(transition_count(p, 0.9, 0.5) >= 1 for p in paths)
        tr.check(f"{scheme.value}: median occupancy", occ, occ >= 0.7)
        tr.check(f"{scheme.value}: median L(400)", big_l, big_l >= 0.8)
        tr.check(f"{scheme.value}: seeds with a transition", moved, moved > len(paths) / 2, "d")
    return tr.result(8, "localization with noise + nonlinearity (alpha0=1, beta=7, 20 seeds)")


def linear_contrast(quick=False):
    tr = _Trace()
    n = 1000 if quick else 4000
    grid = TimeGrid(1e-2, 40_000)
    zz = {}
    for label, model in (("constant", ConstantAlpha(1.0)), ("nonlinear", PolynomialEvenAlpha(1.0))):
        stats = run_ensemble(RunConfig(model, 7.0, EQUATOR, grid, Scheme.ROTATION, n, BASE_SEED))
        zz[label] = float(stats.zz[-1])
    tol = 0.03 * _scale(quick, 4000, 1000)
    tr.check("constant <z^2>(400)", zz["constant"], abs(zz["constant"] - 1 / 3) <= tol, ".4f")
    tr.check("nonlinear <z^2>(400)", zz["nonlinear"], zz["nonlinear"] > 1 / 3 + tol, ".4f")
    tr.note(f"tol={tol:.3g}, n={n}")
    return tr.result(9, "constant alpha at beta=7 does not localize")


def steady_state_flux(quick=False):
    tr = _Trace()
    n = 1000 if quick else 4000
    cfg = RunConfig(PolynomialEvenAlpha(1.0), 7.0, EQUATOR, TimeGrid(1e-2, 20_000),
                    Scheme.ROTATION, n, BASE_SEED)
    _, final = run_ensemble(cfg, return_final=True)
    for zc in (0.25, 0.5, 0.75):
        est = meridian_flux(final, zc, 0.02)
        tr.check(f"z_c={zc}: flux/SE", est.value / est.stderr, est.consistent_with_zero(3.0), "+.2f")
        side = [meridian_flux(final, zc, h) for h in (0.01, 0.04)]
        tr.note(f"h=0.01,0.04: {side[0].value:+.3g},{side[1].value:+.3g}")
    tr.note(f"n={n}, t=200")
    return tr.result(10, "vanishing meridian flux in the nonlinear steady state")


def monte_carlo_scaling(quick=False):
    tr = _Trace()
    sizes = (100, 1000, 10_000)
    replicates = {100: 40, 1000: 8, 10_000: 2} if not quick else {100: 10, 1000: 3, 10_000: 1}
    errors = []
    for n in sizes:
        errs = [
            _max_dev(_linear_ensemble(1.0, 0.7, 5.0, 1e-3, n, seed=1000 + r), 1.0, 0.7, POLE, 5.0)
            for r in range(replicates[n])
        ]
        errors.append(float(np.mean(errs)))
    slope = float(np.polyfit(np.log(sizes), np.log(errors), 1)[0])
    tr.check("log-log slope", slope, abs(slope + 0.5) <= 0.1, "+.3f")
    tr.note("errors=" + ",".join(f"{e:.3g}" for e in errors))
    return tr.result(11, "Monte Carlo error scales as n^-1/2")


CRITERIA = (
    underdamped_moments,
    overdamped_moments,
    decoherence_limit,
    second_moment_stationarity,
    norm_conservation,
    zero_noise_recurrence,
    nonlinear_noiseless,
    localization,
    linear_contrast,
    steady_state_flux,
    monte_carlo_scaling,
)


def run_all(quick=False, report=print):
    results = []
    for check in CRITERIA:
        res = check(quick)
        results.append(res)
        if report:
            report(res.line())
    return results
