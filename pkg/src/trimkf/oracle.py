"""Quadrature ground truth for one-dimensional assimilation problems.

Everything here works on tabulated densities over regular grids: the exact
Bayes posterior (conditioning the joint density on the measured value), the
large-ensemble limit density of the linear ensemble update (a mixture of
shifted conditionals weighted by the observation marginal), its trimmed
counterpart (the same mixture with the marginal reweighted by the trimming
function), the exact Kalman recursion for linear-Gaussian models, and a
Monte-Carlo-plus-KDE realization of prior propagation.

These oracles are deliberately independent of the ensemble code paths they
validate: they never touch samples except where the contract says so.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import gaussian_kde

__all__ = [
    "DensityGrid",
    "JointGrid",
    "OracleError",
    "bayes_posterior",
    "enkf_limit_pdf",
    "tenkf_limit_pdf",
    "kalman_filter_exact",
    "kalman_filter_sequence",
    "prior_propagate_grid",
    "grid_from_function",
    "joint_from_conditional",
    "bimodal_toy",
    "BimodalToy",
]

class OracleError(ValueError):
    """Raised when a quadrature operation is ill-posed (e.g. zero mass)."""


@dataclass(frozen=True)
class DensityGrid:
    """A 1-D probability density tabulated on a regular grid."""

    x: np.ndarray
    pdf: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        pdf = np.asarray(self.pdf, dtype=float)
        if x.ndim != 1 or x.size < 2 or pdf.shape != x.shape:
            raise OracleError("grid and density must be matching 1-D arrays")
        dx = np.diff(x)
        if not np.allclose(dx, dx[0], rtol=1e-9, atol=0):
            raise OracleError("grid must be regular")
        if np.any(pdf < 0):
            raise OracleError("density values must be non-negative")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "pdf", pdf)

    def normalized(self) -> "DensityGrid":
        total = np.trapezoid(self.pdf, self.x)
        if total <= 0:
            raise OracleError("cannot normalize a zero-mass density")
        return DensityGrid(self.x, self.pdf / total)

    def mass(self) -> float:
        return float(np.trapezoid(self.pdf, self.x))

    def mean(self) -> float:
        return float(np.trapezoid(self.x * self.pdf, self.x))

    def var(self) -> float:
        mu = self.mean()
        return float(np.trapezoid((self.x - mu) ** 2 * self.pdf, self.x))

    def std(self) -> float:
        return float(np.sqrt(self.var()))

    def cdf(self) -> np.ndarray:
        """Trapezoidal cumulative distribution on the grid nodes."""
        dx = self.x[1] - self.x[0]
        inner = 0.5 * dx * (self.pdf[1:] + self.pdf[:-1])
        c = np.concatenate([[0.0], np.cumsum(inner)])
        return c / c[-1]


@dataclass(frozen=True)
class JointGrid:
    """A 2-D joint density ``p(x, y)`` tabulated on a regular product grid."""

    x: np.ndarray
    y: np.ndarray
    pdf: np.ndarray  # shape (len(x), len(y))

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        pdf = np.asarray(self.pdf, dtype=float)
        if pdf.shape != (x.size, y.size):
            raise OracleError(f"joint table must be (len(x), len(y)), got {pdf.shape}")
        if np.any(pdf < 0):
            raise OracleError("density values must be non-negative")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "pdf", pdf)

    def normalized(self) -> "JointGrid":
        total = np.trapezoid(np.trapezoid(self.pdf, self.y, axis=1), self.x)
        if total <= 0:
            raise OracleError("cannot normalize a zero-mass joint density")
        return JointGrid(self.x, self.y, self.pdf / total)

    def marginal_x(self) -> DensityGrid:
        return DensityGrid(self.x, np.trapezoid(self.pdf, self.y, axis=1)).normalized()

    def marginal_y(self) -> DensityGrid:
        return DensityGrid(self.y, np.trapezoid(self.pdf, self.x, axis=0)).normalized()


def grid_from_function(fn, lo: float, hi: float, points: int = 2048) -> DensityGrid:
    """Tabulate and normalize a non-negative function on [lo, hi]."""
    x = np.linspace(lo, hi, points)
    return DensityGrid(x, np.asarray(fn(x), dtype=float)).normalized()


def joint_from_conditional(
    prior: DensityGrid,
    cond_pdf,
    y_lo: float,
    y_hi: float,
    points: int | None = None,
) -> JointGrid:
    """Build ``p(x, y) = p(x) p(y | x)`` from a prior grid and a conditional.

    ``cond_pdf(y, x)`` must broadcast over a ``(len(x), len(y))`` evaluation.
    """
    y = np.linspace(y_lo, y_hi, points or prior.x.size)
    table = prior.pdf[:, None] * cond_pdf(y[None, :], prior.x[:, None])
    return JointGrid(prior.x, y, table).normalized()


# ---------------------------------------------------------------------------
# Conditioning and limit mixtures
# ---------------------------------------------------------------------------


def _slice_at(joint: JointGrid, y_star: float) -> np.ndarray:
    """Linear interpolation of the joint table between the two y-rows
    bracketing ``y_star``."""
    y = joint.y
    if not y[0] <= y_star <= y[-1]:
        raise OracleError(f"y*={y_star} outside the tabulated range [{y[0]}, {y[-1]}]")
    j = min(int(np.searchsorted(y, y_star)), y.size - 1)
    if j == 0:
        return joint.pdf[:, 0]
    frac = (y_star - y[j - 1]) / (y[j] - y[j - 1])
    return (1 - frac) * joint.pdf[:, j - 1] + frac * joint.pdf[:, j]


def bayes_posterior(joint: JointGrid, y_star: float) -> DensityGrid:
    """Exact posterior: the joint density sliced at ``y*`` and renormalized."""
    slice_ = _slice_at(joint, y_star)
    grid = DensityGrid(joint.x, slice_)
    if grid.mass() <= 0:
        raise OracleError(f"joint density carries no mass near y*={y_star}")
    return grid.normalized()


def _shifted_conditional_mixture(
    joint: JointGrid, gain: float, y_star: float, y_weight: np.ndarray
) -> DensityGrid:
    """Quadrature of ``\\int p(x - K (y* - y) | y) w(y) dy`` on the x grid.

    ``y_weight`` carries the full averaging weight (marginal density times
    any reweighting); zero-marginal columns contribute nothing.  The
    conditional ``p(x | y_j)`` is the j-th joint column divided by the
    observation marginal, shifted by linear interpolation in x.
    """
    x = joint.x
    marg_y = np.trapezoid(joint.pdf, x, axis=0)
    quad_w = np.full(joint.y.size, 1.0)
    quad_w[0] = quad_w[-1] = 0.5  # trapezoid rule; dy absorbed by normalization
    out = np.zeros_like(x)
    cols = np.nonzero((y_weight > 0) & (marg_y > 0))[0]
    for j in cols:
        shift = gain * (y_star - joint.y[j])
        cond = np.interp(x - shift, x, joint.pdf[:, j], left=0.0, right=0.0)
        out += (quad_w[j] * y_weight[j] / marg_y[j]) * cond
    return DensityGrid(x, out).normalized()


def enkf_limit_pdf(joint: JointGrid, gain: float, y_star: float) -> DensityGrid:
    """Large-ensemble limit of the linear update ``x + K (y* - y)``.

    The density of the updated variable is the average of the conditionals
    ``p(x | y)`` shifted by ``K (y* - y)``, weighted by the observation
    marginal.  With ``K = 0`` it reduces to the prior marginal; only at
    jointly Gaussian inputs does it match the exact posterior.
    """
    marg_y = np.trapezoid(joint.pdf, joint.x, axis=0)
    return _shifted_conditional_mixture(joint, gain, y_star, marg_y)


def tenkf_limit_pdf(
    joint: JointGrid,
    gain: float,
    y_star: float,
    lam: float,
    scale: float | None = None,
) -> DensityGrid:
    """Limit density of the trimmed update: the same shifted-conditional
    mixture with averaging weight ``p(y) exp(-|y - y*| / (scale * lam))``.

    ``scale`` is the distance normalization (defaults to the standard
    deviation of the observation marginal, matching the normalized-L1
    distance); the trimming normalization constant is absorbed by the final
    renormalization.  Large ``lam`` recovers the plain limit density, small
    ``lam`` concentrates the weight at ``y*`` and recovers the posterior.
    """
    if lam <= 0:
        raise OracleError("lam must be positive")
    marg_y = np.trapezoid(joint.pdf, joint.x, axis=0)
    if scale is None:
        ygrid = DensityGrid(joint.y, marg_y).normalized()
        scale = ygrid.std()
    d = np.abs(joint.y - y_star) / scale
    trim = np.exp(-(d - d.min()) / lam)
    return _shifted_conditional_mixture(joint, gain, y_star, marg_y * trim)


# ---------------------------------------------------------------------------
# Exact Kalman recursion (linear-Gaussian reference)
# ---------------------------------------------------------------------------


def kalman_filter_exact(
    A: np.ndarray,
    Q: np.ndarray,
    H: np.ndarray,
    R: np.ndarray,
    mean: np.ndarray,
    cov: np.ndarray,
    y_star: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """One forecast-update cycle of the exact Kalman filter.

    Returns (forecast_mean, forecast_cov, posterior_mean, posterior_cov).
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    H = np.atleast_2d(np.asarray(H, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    y_star = np.atleast_1d(np.asarray(y_star, dtype=float))

    m_f = A @ mean
    p_f = A @ cov @ A.T + Q
    s = H @ p_f @ H.T + R
    try:
        gain = np.linalg.solve(s.T, (p_f @ H.T).T).T
    except np.linalg.LinAlgError as exc:
        raise OracleError(f"singular innovation covariance (cond={np.linalg.cond(s):.3e})") from exc
    m_a = m_f + gain @ (y_star - H @ m_f)
    p_a = (np.eye(cov.shape[0]) - gain @ H) @ p_f
    return m_f, p_f, m_a, p_a


def kalman_filter_sequence(A, Q, H, R, mean0, cov0, ys):
    """Run the exact recursion over a sequence of measurements.

    Returns per-step lists of posterior means and covariances.
    """
    means, covs = [], []
    mean, cov = mean0, cov0
    for y in ys:
        _, _, mean, cov = kalman_filter_exact(A, Q, H, R, mean, cov, y)
        means.append(mean)
        covs.append(cov)
    return means, covs


# ---------------------------------------------------------------------------
# Monte Carlo prior propagation
# ---------------------------------------------------------------------------


def prior_propagate_grid(
    prior: DensityGrid,
    transition_sampler,
    n_mc: int,
    rng: np.random.Generator,
    out_x: np.ndarray | None = None,
) -> DensityGrid:
    """Push a tabulated prior through a one-step transition by Monte Carlo.

    Samples the prior by inverse-CDF on the grid, applies
    ``transition_sampler(samples, rng)``, and lays a Gaussian KDE (Silverman
    bandwidth) over the output grid.
    """
    if n_mc < 10_000:
        raise OracleError("n_mc must be at least 1e4 for a usable KDE")
    u = rng.uniform(size=n_mc)
    samples = np.interp(u, prior.cdf(), prior.x)
    pushed = np.asarray(transition_sampler(samples, rng), dtype=float)
    kde = gaussian_kde(pushed, bw_method="silverman")
    x = prior.x if out_x is None else np.asarray(out_x, dtype=float)
    return DensityGrid(x, kde(x)).normalized()


# ---------------------------------------------------------------------------
# The bimodal test problem
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BimodalToy:
    """A tractable non-Gaussian joint: a two-mode prior observed with noise.

    Prior ``X ~ 0.5 N(-2, 0.25) + 0.5 N(2, 0.25)``, observation
    ``Y = X + N(0, 0.25)``, default measurement ``y* = 1.5``.  Exposes the
    tabulated joint plus a sampler aligned with it.
    """

    joint: JointGrid
    y_star: float
    exact_gain: float

    def sample(self, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """Draw aligned (x, y) samples from the analytic mixture."""
        modes = np.where(rng.uniform(size=n) < 0.5, -2.0, 2.0)
        x = modes + 0.5 * rng.standard_normal(n)
        y = x + 0.5 * rng.standard_normal(n)
        return x, y


def _norm_pdf(z, mu, var):
    return np.exp(-0.5 * (z - mu) ** 2 / var) / np.sqrt(2 * np.pi * var)


def bimodal_toy(points: int = 2048, span_sds: float = 8.0, y_star: float = 1.5) -> BimodalToy:
    """Build the bimodal mixture fixture on a regular grid.

    The grid spans the prior mean plus/minus ``span_sds`` prior standard
    deviations on both axes.  The exact gain ``cov(X, Y) / var(Y)`` of the
    mixture is attached for the limit-density oracles.
    """
    var_x = 0.25 + 4.0  # component variance plus mean spread
    sd_x = np.sqrt(var_x)
    sd_y = np.sqrt(var_x + 0.25)
    lo_x, hi_x = -span_sds * sd_x, span_sds * sd_x
    lo_y, hi_y = -span_sds * sd_y, span_sds * sd_y

    x = np.linspace(lo_x, hi_x, points)
    prior = DensityGrid(
        x, 0.5 * _norm_pdf(x, -2.0, 0.25) + 0.5 * _norm_pdf(x, 2.0, 0.25)
    ).normalized()
    joint = joint_from_conditional(
        prior, lambda y, xx: _norm_pdf(y, xx, 0.25), lo_y, hi_y, points
    )
    # cov(X, Y) = var(X) for additive noise; gain = var(X) / var(Y).
    gain = var_x / (var_x + 0.25)
    return BimodalToy(joint=joint, y_star=y_star, exact_gain=gain)
