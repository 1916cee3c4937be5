"""Error and distribution metrics for assimilation runs.

RMSE is taken over *all* ensemble members and state dimensions, not just
the ensemble mean (a mean-only variant is provided as a secondary column).
Distribution distances accept plain samples, weighted samples, or
tabulated densities interchangeably.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import wasserstein_distance as _scipy_w1

from .ensemble import Ensemble, normalize_weights
from .oracle import DensityGrid

__all__ = [
    "RmseSeries",
    "ensemble_rmse",
    "ensemble_mean_rmse",
    "time_avg_rmse",
    "ks_distance",
    "wasserstein_distance",
    "replicate_quantiles",
]


@dataclass(frozen=True)
class RmseSeries:
    """Per-step ensemble RMSE values with their time stamps."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise ValueError("times and values must be matching 1-D arrays")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @property
    def aggregate(self) -> float:
        return time_avg_rmse(self.values)


def ensemble_rmse(e: Ensemble, truth: np.ndarray) -> float:
    """Root-mean-square distance of all members from the truth state."""
    truth = np.asarray(truth, dtype=float)
    if truth.shape != (e.dim,):
        raise ValueError(f"truth shape {truth.shape} does not match state dim {e.dim}")
    dev = e.members - truth[:, None]
    return float(np.sqrt(np.mean(dev * dev)))


def ensemble_mean_rmse(e: Ensemble, truth: np.ndarray) -> float:
    """Root-mean-square error of the ensemble mean alone."""
    truth = np.asarray(truth, dtype=float)
    if truth.shape != (e.dim,):
        raise ValueError(f"truth shape {truth.shape} does not match state dim {e.dim}")
    dev = e.members.mean(axis=1) - truth
    return float(np.sqrt(np.mean(dev * dev)))


def time_avg_rmse(values: np.ndarray | RmseSeries) -> float:
    """Quadratic time average: the root of the mean squared series value."""
    if isinstance(values, RmseSeries):
        values = values.values
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("cannot average an empty RMSE series")
    return float(np.sqrt(np.mean(values * values)))


# ---------------------------------------------------------------------------
# Distribution distances
# ---------------------------------------------------------------------------


def _as_cdf(dist) -> tuple[np.ndarray, np.ndarray, bool]:
    """Canonicalize a distribution argument to (support, cdf, is_step).

    Accepts a 1-D sample array, a ``(samples, weights)`` pair, or a
    :class:`DensityGrid`.  Step CDFs (samples) jump at the support points;
    grid CDFs are piecewise linear.
    """
    if isinstance(dist, DensityGrid):
        return dist.x, dist.cdf(), False
    if isinstance(dist, tuple) and len(dist) == 2:
        samples, w = np.asarray(dist[0], dtype=float).ravel(), dist[1]
        w = normalize_weights(np.asarray(w, dtype=float))
        order = np.argsort(samples, kind="stable")
        return samples[order], np.cumsum(w[order]), True
    samples = np.asarray(dist, dtype=float).ravel()
    if samples.size == 0:
        raise ValueError("empty sample")
    s = np.sort(samples)
    return s, np.arange(1, s.size + 1) / s.size, True


def _interp_cdf(x, support, cdf, is_step):
    if is_step:
        idx = np.searchsorted(support, x, side="right")
        return np.where(idx > 0, cdf[np.minimum(idx, cdf.size) - 1], 0.0)
    return np.interp(x, support, cdf, left=0.0, right=1.0)


def ks_distance(a, b) -> float:
    """Kolmogorov-Smirnov distance between two 1-D distributions.

    Each argument is a sample array, a ``(samples, weights)`` pair, or a
    :class:`DensityGrid`; the sup of the CDF difference is evaluated at all
    candidate points of both supports, approaching step jumps from both
    sides.
    """
    xa, ca, step_a = _as_cdf(a)
    xb, cb, step_b = _as_cdf(b)
    points = np.union1d(xa, xb)
    fa = _interp_cdf(points, xa, ca, step_a)
    fb = _interp_cdf(points, xb, cb, step_b)
    d = float(np.max(np.abs(fa - fb)))
    # At a step jump the sup may be attained just below the point.
    left = points - np.spacing(np.abs(points) + 1.0)
    fa_left = _interp_cdf(left, xa, ca, step_a)
    fb_left = _interp_cdf(left, xb, cb, step_b)
    return max(d, float(np.max(np.abs(fa_left - fb_left))))


def wasserstein_distance(a, b) -> float:
    """1-Wasserstein distance between two 1-D distributions (same argument
    conventions as :func:`ks_distance`)."""

    def to_sample(dist):
        if isinstance(dist, DensityGrid):
            # Cell masses at the nodes act as weights on the node positions.
            w = dist.pdf.copy()
            w[0] *= 0.5
            w[-1] *= 0.5
            return dist.x, w / w.sum()
        if isinstance(dist, tuple) and len(dist) == 2:
            return np.asarray(dist[0], dtype=float).ravel(), normalize_weights(
                np.asarray(dist[1], dtype=float)
            )
        s = np.asarray(dist, dtype=float).ravel()
        return s, None

    xa, wa = to_sample(a)
    xb, wb = to_sample(b)
    return float(_scipy_w1(xa, xb, u_weights=wa, v_weights=wb))


def replicate_quantiles(values: np.ndarray, qs=(0.25, 0.5, 0.75)) -> np.ndarray:
    """Linear-interpolation quantiles of per-replicate aggregates."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("need at least one replicate")
    return np.quantile(values, np.asarray(qs, dtype=float), method="linear")
