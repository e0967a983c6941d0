import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from blochloc.acceptance import localization_runs
from blochloc.core import BlochVector, TimeGrid
from blochloc.dynamics import ConstantAlpha, PolynomialEvenAlpha
from blochloc.ensemble import RunConfig, derive_path_seed, brownian_path, run_ensemble
from blochloc.integrators import Scheme, integrate_batch
from blochloc.observables import (
    EmptyBandError,
    InsufficientDataError,
    dwell_times,
    localization_average,
    meridian_flux,
    pole_occupancy,
    pole_visits,
    tail_edges,
    tail_exponent,
    transition_count,
    z_histogram,
)


class Path:
    def __init__(self, t, z):
        self.times, self.z = np.asarray(t, float), np.asarray(z, float)


def cos_path(freq, t_max, n=200_001):
    t = np.linspace(0, t_max, n)
    return Path(t, np.cos(freq * t))


z_series = st.lists(st.floats(-1, 1, allow_nan=False), min_size=2, max_size=200)


def test_localization_constant_pole():
    p = Path(np.arange(11) * 0.1, np.ones(11))
    np.testing.assert_array_equal(localization_average(p).values, 1.0)


def test_localization_of_cosine_tends_to_half():
    s = localization_average(cos_path(2, 500))
    assert s.values[0] == 1.0
    assert s.values[-1] == pytest.approx(0.5, abs=1e-3)


@given(z_series)
def test_localization_bounded(z):
    vals = localization_average(Path(np.arange(len(z)) * 0.01, z)).values
    assert np.all((vals >= 0) & (vals <= 1))


@given(z_series)
def test_localization_monotone_for_growing_z2(z):
    z = np.sqrt(np.sort(np.square(z)))
    vals = localization_average(Path(np.arange(len(z)) * 0.01, z)).values
    assert np.all(np.diff(vals) >= -1e-12)


def test_localization_grows_with_noise_and_nonlinearity():
    # alpha0=1, beta=7: the running average keeps rising over long runs
    paths = localization_runs(Scheme.ROTATION, seeds=range(1, 21), steps=160_000)
    grid_k = {t: int(t / 1e-2) for t in (100, 400, 1600)}
    med = {t: np.median([localization_average(p).values[k] for p in paths])
           for t, k in grid_k.items()}
    assert med[100] < med[400] < med[1600]


def test_pole_occupancy():
    assert pole_occupancy(Path([0, 1], [1, 1]), 0.9) == 1.0
    # frozen from dense sampling of cos over 500 periods: 0.2871000356
    occ = pole_occupancy(cos_path(2, 1000 * math.pi, 2_000_001), 0.9)
    assert occ == pytest.approx(0.2871000356, abs=2e-4)
    assert occ == pytest.approx(2 / math.pi * math.acos(0.9), abs=2e-4)
    with pytest.raises(ValueError):
        pole_occupancy(Path([0, 1], [1, 1]), 1.0)


def test_linear_model_occupancy_is_uniform_baseline():
    grid = TimeGrid(1e-2, 40_000)
    seeds = range(1, 21)
    noise = np.column_stack([brownian_path(derive_path_seed(s, 0), 1e-2, 40_000).increments
                             for s in seeds])
    occ = {}
    for label, model in (("linear", ConstantAlpha(1)), ("nonlinear", PolynomialEvenAlpha(1))):
        states = integrate_batch((0, 1, 0), grid, noise, model, 7.0)
        occ[label] = np.mean([pole_occupancy(Path(grid.times, states[:, j, 2]))
                              for j in range(len(seeds))])
    # uniform measure on the sphere puts 10% of the mass at |z| > 0.9
    assert occ["linear"] == pytest.approx(0.1, abs=0.03)
    assert occ["nonlinear"] > 2 * occ["linear"]


def test_histogram_basics():
    edges = np.linspace(-1, 1, 11)
    h = z_histogram(np.ones(50), edges)
    assert h.counts[-1] == 50 and h.counts[:-1].sum() == 0 and h.total == 50
    grid = np.linspace(-1, 1, 10_000, endpoint=False) + 1e-4
    h = z_histogram(grid, edges)
    assert h.counts.min() >= 999 and h.counts.max() <= 1001
    assert h.density.sum() * 0.2 == pytest.approx(1)
    with pytest.raises(ValueError):
        z_histogram([1.01], edges)
    with pytest.raises(ValueError):
        z_histogram([0.0], np.linspace(-0.5, 1, 5))


@given(st.lists(st.floats(-1, 1, allow_nan=False), min_size=1, max_size=100), st.randoms())
def test_histogram_permutation_invariant(samples, rnd):
    edges = tail_edges()
    shuffled = list(samples)
    rnd.shuffle(shuffled)
    h1, h2 = z_histogram(samples, edges), z_histogram(shuffled, edges)
    np.testing.assert_array_equal(h1.counts, h2.counts)
    assert h1.counts.sum() == h1.total


def test_tail_exponent_inverse_cdf_oracle(rng):
    # density ~ (1 - z)^(-1/2) on [0.9, 1): 1 - z = 0.1 U^2
    z = 1 - 0.1 * rng.random(1_000_000) ** 2
    fit = tail_exponent(z_histogram(z, tail_edges(0.1, 20, 1e-4)), 0.1)
    assert fit.gamma == pytest.approx(0.5, abs=0.05)
    assert fit.n_bins >= 10


def test_tail_exponent_flat_density(rng):
    z = rng.uniform(-1, 1, 1_000_000)
    fit = tail_exponent(z_histogram(z, tail_edges(0.1, 12, 1e-3)), 0.1)
    assert fit.gamma == pytest.approx(0.0, abs=0.05)


def test_tail_exponent_needs_bins():
    with pytest.raises(InsufficientDataError):
        tail_exponent(z_histogram([0.95, 0.0], tail_edges()), 0.1)


def test_nonlinear_mass_concentrates_with_time():
    finals = {}
    for t_max in (50, 200, 600):
        cfg = RunConfig(PolynomialEvenAlpha(1), 7.0, BlochVector(0, 1, 0),
                        TimeGrid.spanning(t_max, 1e-2), Scheme.ROTATION, 1000, 5)
        _, finals[t_max] = run_ensemble(cfg, return_final=True)
    near_pole = [np.mean(np.abs(finals[t][:, 2]) > 0.99) for t in (50, 200, 600)]
    assert near_pole[0] < near_pole[1] < near_pole[2]
    gammas = [tail_exponent(z_histogram(np.abs(finals[t][:, 2]), tail_edges(0.1, 12, 1e-4)))
              .gamma for t in (50, 600)]
    assert gammas[1] > gammas[0]


def test_meridian_flux_symmetric_snapshot_is_zero(rng):
    pts = rng.normal(size=(500, 3))
    pts /= np.linalg.norm(pts, axis=1)[:, None]
    mirrored = pts * [1, -1, 1]
    est = meridian_flux(np.vstack([pts, mirrored]), 0.3, 0.1)
    assert est.value == 0.0


def test_meridian_flux_box_kernel_arithmetic():
    h = 0.02
    snapshot = [BlochVector(math.sqrt(0.5), 0.5, 0.5)] * 10
    est = meridian_flux(snapshot, 0.5, h)
    assert est.value == pytest.approx(0.5 / (2 * h))
    assert est.value * 2 * h == pytest.approx(0.5)
    assert est.n_in_band == 10


def test_meridian_flux_empty_band():
    with pytest.raises(EmptyBandError):
        meridian_flux(np.array([[0, 0, 1.0]]), 0.0, 0.02)


@given(st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)),
                min_size=2, max_size=50))
def test_meridian_flux_antisymmetric(pts):
    pts = np.array(pts)
    pts[0, 2] = 0.1  # at least one sample in band
    a = meridian_flux(pts, 0.1, 0.05)
    b = meridian_flux(pts * [1, -1, 1], 0.1, 0.05)
    assert a.value == -b.value


def test_transition_count_examples():
    assert transition_count(Path([0, 1, 2], [1, 1, 1])) == 0
    # cos(0.1 s) over 10 periods: an extremum every half period
    assert transition_count(cos_path(0.1, 200 * math.pi), 0.9, 0.5) == 20


def test_transition_count_single_sample_jump():
    assert transition_count(Path(range(4), [0.95, -0.95, 0.95, 0.2])) == 2


@given(st.lists(st.floats(-1, 1, allow_nan=False), min_size=1, max_size=300))
def test_transition_count_time_reversal(z):
    t = np.arange(len(z))
    assert transition_count(Path(t, z)) == transition_count(Path(t, z[::-1]))


def test_pole_visits_and_dwell_times():
    z = [0, 0.95, 0.97, 0.6, 0.4, -0.92, -0.3, 0.0, 0.91]
    p = Path(np.arange(len(z)) * 0.5, z)
    assert pole_visits(p) == [(1, 1, 4), (-1, 5, 6), (1, 8, 8)]
    np.testing.assert_allclose(dwell_times(p), [1.5, 0.5])
    with pytest.raises(ValueError):
        pole_visits(p, 0.5, 0.9)
