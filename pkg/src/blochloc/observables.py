"""Localization and steady-state diagnostics.

Trajectory arguments may be ``Trajectory`` objects or anything with ``z`` and
``times`` attributes; the helpers in this module only read those.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class InsufficientDataError(ValueError):
    """Too few samples or bins for the requested estimate."""


class EmptyBandError(InsufficientDataError):
    """No sample fell inside the kernel band, so the estimate is undefined."""


@dataclass(frozen=True)
class Histogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    total: int

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    @property
    def density(self) -> np.ndarray:
        return self.counts / (self.total * self.widths)


@dataclass(frozen=True)
class LocalizationSeries:
    times: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class TailFit:
    gamma: float
    residual: float  # rms of the log-density fit residuals
    n_bins: int


@dataclass(frozen=True)
class FluxEstimate:
    value: float
    stderr: float
    n_in_band: int

    def consistent_with_zero(self, n_sigma: float = 3.0) -> bool:
        return abs(self.value) <= n_sigma * self.stderr


def _times_and_z(traj):
    return np.asarray(traj.times, dtype=float), np.asarray(traj.z, dtype=float)


def localization_average(traj) -> LocalizationSeries:
    """Running time average of z^2 (trapezoidal rule); L(t0) = z(t0)^2."""
    t, z = _times_and_z(traj)
    if len(z) == 0:
        raise InsufficientDataError("empty trajectory")
    z2 = z * z
    area = np.concatenate([[0.0], np.cumsum(0.5 * (z2[1:] + z2[:-1]) * np.diff(t))])
    elapsed = t - t[0]
    values = np.empty_like(z2)
    values[0] = z2[0]
    values[1:] = area[1:] / elapsed[1:]
    # rounding can push an all-ones series a hair above 1
    return LocalizationSeries(t, np.clip(values, 0.0, 1.0))


def pole_occupancy(traj, threshold: float = 0.9) -> float:
    """Fraction of sampled states with |z| > threshold."""
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    z = np.asarray(traj.z, dtype=float)
    return float(np.mean(z * z > threshold * threshold))


def z_histogram(samples, edges) -> Histogram:
    samples = np.asarray(samples, dtype=float).ravel()
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or len(edges) < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("edges must be a strictly increasing sequence")
    if edges[0] > -1 or edges[-1] < 1:
        raise ValueError("edges must cover [-1, 1]")
    if samples.size and (samples.min() < -1 or samples.max() > 1):
        raise ValueError("z samples must lie in [-1, 1]")
    counts, _ = np.histogram(samples, bins=edges)
    return Histogram(edges, counts, int(samples.size))


def tail_edges(window: float = 0.1, n_tail: int = 20, depth: float = 1e-4,
               n_body: int = 40) -> np.ndarray:
    """Edges uniform on [-1, 1 - window], then geometric in 1 - z up to the pole."""
    body = np.linspace(-1.0, 1.0 - window, n_body + 1)
    gaps = np.geomspace(window, depth, n_tail + 1)[1:]
    return np.concatenate([body, 1.0 - gaps, [1.0]])


def tail_exponent(hist: Histogram, window: float = 0.1, min_bins: int = 4) -> TailFit:
    """Fit density ~ (1 - z)^(-gamma) over bins inside [1 - window, 1).

    The bin touching z = 1 is dropped: mass piling up on the pole itself would
    otherwise dominate the fit.
    """
    if not 0 < window < 1:
        raise ValueError("window must lie in (0, 1)")
    lo, hi = hist.bin_edges[:-1], hist.bin_edges[1:]
    keep = (lo >= 1 - window - 1e-12) & (hi < 1.0) & (hist.counts > 0)
    if keep.sum() < min_bins:
        raise InsufficientDataError(
            f"only {int(keep.sum())} nonempty bins in the tail window, need {min_bins}")
    # geometric bin centre in 1 - z
    gap = np.sqrt((1 - lo[keep]) * (1 - hi[keep]))
    u = -np.log(gap)
    v = np.log(hist.density[keep])
    slope, intercept = np.polyfit(u, v, 1)
    resid = v - (slope * u + intercept)
    return TailFit(float(slope), float(np.sqrt(np.mean(resid ** 2))), int(keep.sum()))


def meridian_flux(snapshot, z_c: float, bandwidth: float = 0.02) -> FluxEstimate:
    """Box-kernel estimate of <delta(z - z_c) y> over an ensemble snapshot.

    ``snapshot`` is an (n, 3) array (or sequence of Bloch vectors).
    """
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    if not -1 < z_c < 1:
        raise ValueError("z_c must lie in (-1, 1)")
    pts = np.asarray([tuple(b) for b in snapshot] if not isinstance(snapshot, np.ndarray)
                     else snapshot, dtype=float)
    y, z = pts[:, 1], pts[:, 2]
    inside = np.abs(z - z_c) <= bandwidth
    n_in = int(inside.sum())
    if n_in == 0:
        raise EmptyBandError(f"no samples within {bandwidth} of z_c={z_c}")
    terms = np.where(inside, y, 0.0) / (2 * bandwidth)
    n = len(terms)
    stderr = float(np.std(terms, ddof=1) / np.sqrt(n)) if n > 1 else float("inf")
    return FluxEstimate(float(np.mean(terms)), stderr, n_in)


def pole_visits(traj, enter: float = 0.9, exit: float = 0.5) -> list:
    """Hysteresis segmentation into pole visits.

    A visit opens when |z| > enter and closes when |z| < exit. Returns a list
    of ``(sign, start_index, end_index)``; an unfinished visit ends at the
    last sample.
    """
    if not 0 < exit < enter < 1:
        raise ValueError("need 0 < exit < enter < 1")
    z = np.asarray(traj.z, dtype=float)
    visits = []
    sign, start = 0, 0
    for k, v in enumerate(z):
        if sign == 0:
            if abs(v) > enter:
                sign, start = (1 if v > 0 else -1), k
        elif abs(v) < exit:
            visits.append((sign, start, k))
            sign = 0
        elif abs(v) > enter and (v > 0) != (sign > 0):
            # jumped straight across in one sample
            visits.append((sign, start, k))
            sign, start = -sign, k
    if sign != 0:
        visits.append((sign, start, len(z) - 1))
    return visits


def transition_count(traj, enter: float = 0.9, exit: float = 0.5) -> int:
    """Number of pole-to-pole alternations between consecutive visits."""
    signs = [s for s, _, _ in pole_visits(traj, enter, exit)]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def dwell_times(traj, enter: float = 0.9, exit: float = 0.5) -> np.ndarray:
    """Durations of the completed pole visits."""
    t = np.asarray(traj.times, dtype=float)
    visits = pole_visits(traj, enter, exit)
    z = np.asarray(traj.z)
    done = [(s, a, b) for s, a, b in visits if abs(z[b]) < exit]
    return np.array([t[b] - t[a] for _, a, b in done])
