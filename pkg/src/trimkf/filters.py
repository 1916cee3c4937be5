"""Assimilation algorithms: EnKF, trimmed EnKF, and bootstrap particle filter.

The trimmed update follows its algorithm statement literally: the Kalman
gain is estimated from the *untrimmed* forecast ensemble, distances to the
measurement are turned into exponential weights with scale ``lambda``
(optionally tuned by bisection to hit a target effective size), the joint
ensemble is bootstrap-resampled under those weights, and only then is the
linear update applied.  Large ``lambda`` recovers the plain EnKF update up
to resampling; small ``lambda`` approaches the exact Bayesian posterior.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .ensemble import (
    Ensemble,
    JointEnsemble,
    bootstrap_resample,
    effective_size,
    indices_digest,
    kalman_gain,
    normalize_weights,
    resample_indices,
    weight_entropy,
)
from .integrators import IntegratorConfig, integrate
from .models import DynModel, MeasModel, log_likelihood, observe

__all__ = [
    "TrimConfig",
    "AugmentConfig",
    "FilterDiagnostics",
    "FilterState",
    "FilterError",
    "FilterMethod",
    "AssimilationProblem",
    "TruthRun",
    "AssimilationRun",
    "forecast",
    "enkf_update",
    "trim_distance",
    "trim_weights",
    "adapt_lambda",
    "tenkf_update",
    "augment_forecast",
    "pf_update",
    "simulate_truth",
    "run_assimilation",
]

DISTANCE_KINDS = ("normalized-l1", "max-abs")


class FilterError(RuntimeError):
    """Raised for degenerate filter states (e.g. zero total likelihood)."""


@dataclass(frozen=True)
class TrimConfig:
    """Trimming-function family and effective-size control.

    With ``target_ne`` set, ``lam`` is tuned by bisection at every update to
    keep the effective ensemble size near the target; otherwise the fixed
    ``lam`` is used as-is.  ``gain_from_trimmed`` recomputes the gain from
    the resampled ensemble instead of the full forecast ensemble; it is a
    speculative non-default variant.
    """

    distance: str = "normalized-l1"
    lam: float = 1.0
    target_ne: float | None = None
    lam_bounds: tuple[float, float] = (1e-6, 1e6)
    ne_tolerance: float = 0.05
    max_bisect_iters: int = 60
    gain_from_trimmed: bool = False

    def __post_init__(self):
        if self.distance not in DISTANCE_KINDS:
            raise ValueError(f"unknown distance {self.distance!r}; expected {DISTANCE_KINDS}")
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        lo, hi = self.lam_bounds
        if not (0 < lo < hi):
            raise ValueError("lam_bounds must satisfy 0 < lo < hi")
        if self.target_ne is not None and self.target_ne < 1:
            raise ValueError("target_ne must be at least 1")
        if self.ne_tolerance <= 0:
            raise ValueError("ne_tolerance must be positive")


@dataclass(frozen=True)
class AugmentConfig:
    """Adaptive ensemble augmentation: when fewer than ``n`` forecast members
    fall within ``d_max`` of the measurement, the forecast ensemble is grown
    (up to ``r_max`` times over) from perturbed initial conditions.

    ``distance`` is the measure used for the near-observation count; it is
    independent of the trimming distance (the count uses the max-abs measure
    in the reference experiments, in raw observation units).
    """

    d_max: float
    r_max: float = 3.0
    sigma_p: float = 0.0
    distance: str = "max-abs"

    def __post_init__(self):
        if self.d_max <= 0:
            raise ValueError("d_max must be positive")
        if self.r_max < 1:
            raise ValueError("r_max must be at least 1")
        if self.sigma_p < 0:
            raise ValueError("sigma_p must be non-negative")
        if self.distance not in DISTANCE_KINDS:
            raise ValueError(f"unknown distance {self.distance!r}; expected {DISTANCE_KINDS}")


@dataclass
class FilterDiagnostics:
    """Per-update bookkeeping emitted alongside the posterior."""

    lambda_used: float | None = None
    n_e: float | None = None
    n_forecast: int | None = None
    n_aug: int | None = None
    n_d: int | None = None
    entropy: float | None = None
    resample_digest: str | None = None
    distance_scale: np.ndarray | None = None
    flag: str | None = None


@dataclass
class FilterState:
    """Posterior ensemble plus update diagnostics."""

    posterior: Ensemble
    diagnostics: FilterDiagnostics = field(default_factory=FilterDiagnostics)


# ---------------------------------------------------------------------------
# Forecast
# ---------------------------------------------------------------------------


def forecast(
    prior: Ensemble,
    dyn: DynModel,
    meas: MeasModel,
    cfg: IntegratorConfig,
    horizon: float,
    rng: np.random.Generator,
    t0: float = 0.0,
) -> JointEnsemble:
    """Propagate every member over the forecast horizon, then observe it.

    Members stay column-aligned between states and observations.  The whole
    member block advances at once: fixed-step schemes are bit-identical to
    per-member stepping, and the adaptive scheme steps the block in lockstep
    with the worst member's error norm controlling the shared step.
    """
    x = prior.members
    if horizon < 0:
        raise ValueError("forecast horizon must be non-negative")
    if dyn.transition is not None:
        states = np.asarray(dyn.transition(x, t0, rng), dtype=float)
    elif horizon == 0.0:
        states = x.copy()
    else:
        states = integrate(dyn, x, t0, t0 + horizon, cfg, rng)
    obs = np.atleast_2d(observe(meas, states, rng))
    return JointEnsemble(states=Ensemble(states), observations=obs)


# ---------------------------------------------------------------------------
# EnKF
# ---------------------------------------------------------------------------


def enkf_update(joint: JointEnsemble, y_star: np.ndarray) -> FilterState:
    """Linear ensemble update ``x_i + K (y* - y_i)`` with the sample gain.

    No perturbation is added to the measurement value: the observation
    ensemble already carries the measurement-noise realizations.
    """
    gain = kalman_gain(joint)
    y_star = np.asarray(y_star, dtype=float).reshape(-1, 1)
    updated = joint.states.members + gain @ (y_star - joint.observations)
    diag = FilterDiagnostics(n_forecast=joint.size, n_e=float(joint.size))
    return FilterState(posterior=Ensemble(updated), diagnostics=diag)


# ---------------------------------------------------------------------------
# Trimming
# ---------------------------------------------------------------------------


def trim_distance(
    y: np.ndarray,
    y_star: np.ndarray,
    kind: str = "normalized-l1",
    scale: np.ndarray | None = None,
) -> np.ndarray:
    """Distance of each observed-forecast member from the measurement.

    ``normalized-l1`` sums per-component absolute deviations divided by the
    per-component scale (defaults to the sample standard deviation of the
    forecast observations; zero-spread components are skipped with a
    warning).  ``max-abs`` takes the largest absolute component deviation,
    unscaled.
    """
    y = np.atleast_2d(np.asarray(y, dtype=float))
    dev = np.abs(y - np.asarray(y_star, dtype=float).reshape(-1, 1))
    if kind == "max-abs":
        return dev.max(axis=0)
    if kind != "normalized-l1":
        raise ValueError(f"unknown distance kind {kind!r}")
    if scale is None:
        scale = y.std(axis=1, ddof=1) if y.shape[1] > 1 else np.ones(y.shape[0])
    scale = np.asarray(scale, dtype=float)
    keep = scale > 0
    if not np.all(keep):
        warnings.warn(
            f"{int((~keep).sum())} observation dimension(s) have zero spread; "
            "skipped in the normalized-L1 distance",
            stacklevel=2,
        )
        if not np.any(keep):
            return np.zeros(y.shape[1])
    return (dev[keep] / scale[keep, None]).sum(axis=0)


def trim_weights(d: np.ndarray, lam: float) -> np.ndarray:
    """Normalized weights proportional to ``exp(-d / lam)``.

    Computed in log space with max subtraction, so at least the
    smallest-distance member always keeps nonzero weight.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise ValueError("distances must be non-negative")
    logw = -d / lam
    logw -= logw.max()
    return normalize_weights(np.exp(logw))


def adapt_lambda(
    d: np.ndarray,
    target_ne: float,
    cfg: TrimConfig,
) -> tuple[float, np.ndarray, str | None]:
    """Tune the trimming scale so the effective size hits ``target_ne``.

    The effective size is non-decreasing in ``lambda``, so a bisection on
    ``log(lambda)`` over ``cfg.lam_bounds`` converges; iteration stops when
    ``|n_e - target| / target <= cfg.ne_tolerance`` or after
    ``cfg.max_bisect_iters`` halvings.  If the target is unreachable at a
    bound, that bound is returned together with a diagnostic flag.

    Returns
    -------
    (lambda, weights, flag)
        ``flag`` is None on clean convergence.
    """
    d = np.asarray(d, dtype=float)
    n = d.size
    if not 1 <= target_ne <= n:
        raise ValueError(f"target_ne must lie in [1, {n}], got {target_ne}")
    lo, hi = cfg.lam_bounds
    if np.all(d == d[0]):
        return hi, np.full(n, 1.0 / n), "no trim possible"

    def ne_at(lam):
        w = trim_weights(d, lam)
        return effective_size(w), w

    ne_hi, w_hi = ne_at(hi)
    if ne_hi < target_ne * (1 - cfg.ne_tolerance):
        return hi, w_hi, "target above reach at lam_max"
    if abs(ne_hi - target_ne) / target_ne <= cfg.ne_tolerance:
        # zero-trim already satisfies the target; prefer the mildest trim
        return hi, w_hi, None
    ne_lo, w_lo = ne_at(lo)
    if ne_lo > target_ne * (1 + cfg.ne_tolerance):
        return lo, w_lo, "target below reach at lam_min"

    log_lo, log_hi = np.log10(lo), np.log10(hi)
    lam, w, ne = hi, w_hi, ne_hi
    for _ in range(cfg.max_bisect_iters):
        mid = 0.5 * (log_lo + log_hi)
        lam = 10.0 ** mid
        ne, w = ne_at(lam)
        if abs(ne - target_ne) / target_ne <= cfg.ne_tolerance:
            return lam, w, None
        if ne > target_ne:
            log_hi = mid
        else:
            log_lo = mid
    return lam, w, "max_bisect_iters reached"


def tenkf_update(
    joint: JointEnsemble,
    y_star: np.ndarray,
    cfg: TrimConfig,
    rng: np.random.Generator,
    posterior_size: int | None = None,
) -> FilterState:
    """Trimmed ensemble update.

    Order of operations: sample gain from the full forecast ensemble,
    member distances and trimming weights (tuned to ``cfg.target_ne`` when
    set), bootstrap resampling of the joint ensemble, then the linear
    update on the resampled pairs.  ``posterior_size`` lets an augmented
    forecast ensemble shrink back to the configured member count.
    """
    y_star = np.asarray(y_star, dtype=float)
    gain = None
    if not cfg.gain_from_trimmed:
        gain = kalman_gain(joint)

    scale = None
    if cfg.distance == "normalized-l1":
        scale = joint.observations.std(axis=1, ddof=1)
    d = trim_distance(joint.observations, y_star, cfg.distance, scale)

    flag = None
    if cfg.target_ne is not None:
        lam, w, flag = adapt_lambda(d, min(cfg.target_ne, joint.size), cfg)
    else:
        lam, w = cfg.lam, trim_weights(d, cfg.lam)

    trimmed, idx = bootstrap_resample(joint, w, rng, size=posterior_size)
    if cfg.gain_from_trimmed:
        gain = kalman_gain(trimmed)

    updated = trimmed.states.members + gain @ (
        y_star.reshape(-1, 1) - trimmed.observations
    )
    diag = FilterDiagnostics(
        lambda_used=float(lam),
        n_e=effective_size(w),
        n_forecast=joint.size,
        entropy=weight_entropy(w),
        resample_digest=indices_digest(idx),
        distance_scale=scale,
        flag=flag,
    )
    return FilterState(posterior=Ensemble(updated), diagnostics=diag)


# ---------------------------------------------------------------------------
# Adaptive ensemble augmentation
# ---------------------------------------------------------------------------


def augment_forecast(
    joint: JointEnsemble,
    prior: Ensemble,
    y_star: np.ndarray,
    aug: AugmentConfig,
    pipeline: Callable[[np.ndarray, np.random.Generator], JointEnsemble],
    rng: np.random.Generator,
    scale: np.ndarray | None = None,
) -> tuple[JointEnsemble, FilterDiagnostics]:
    """Grow the forecast ensemble when too few members are near the data.

    ``n_d`` counts members within ``aug.d_max`` of the measurement under
    ``aug.distance``.  When ``n_d < n`` the target size is
    ``floor(n * min(r_max, n / n_d))`` (the cap binds when ``n_d`` is
    zero); the extra initial conditions are drawn uniformly from the
    pre-forecast ensemble, perturbed per dimension with ``N(0, sigma_p^2)``
    noise, and pushed through ``pipeline`` (the same forecast map that
    produced ``joint``).
    """
    n = joint.size
    d = trim_distance(joint.observations, y_star, aug.distance, scale)
    n_d = int(np.count_nonzero(d < aug.d_max))
    diag = FilterDiagnostics(n_forecast=n, n_d=n_d, n_aug=n)
    if n_d >= n:
        return joint, diag
    ratio = aug.r_max if n_d == 0 else min(aug.r_max, n / n_d)
    n_aug = int(np.floor(n * ratio))
    diag.n_aug = n_aug
    extra = n_aug - n
    if extra <= 0:
        return joint, diag
    picks = rng.integers(0, prior.size, size=extra)
    ics = prior.members[:, picks] + aug.sigma_p * rng.standard_normal(
        (prior.dim, extra)
    )
    fresh = pipeline(ics, rng)
    merged = JointEnsemble(
        states=Ensemble(np.concatenate([joint.states.members, fresh.states.members], axis=1)),
        observations=np.concatenate([joint.observations, fresh.observations], axis=1),
    )
    return merged, diag


# ---------------------------------------------------------------------------
# Bootstrap particle filter
# ---------------------------------------------------------------------------


def pf_update(
    joint: JointEnsemble,
    y_star: np.ndarray,
    meas: MeasModel,
    rng: np.random.Generator,
) -> FilterState:
    """Bootstrap particle update: likelihood weights, then pure resampling.

    Weights are proportional to the measurement likelihood of each state
    member, computed in log space; the posterior is the resampled state
    ensemble, with no linear shift.
    """
    loglik = np.asarray(log_likelihood(meas, joint.states.members, y_star), dtype=float)
    peak = loglik.max()
    if not np.isfinite(peak):
        raise FilterError("filter degeneracy: all likelihoods vanished")
    w = normalize_weights(np.exp(loglik - peak))
    idx = resample_indices(w, joint.size, rng)
    posterior = Ensemble(joint.states.members[:, idx])
    diag = FilterDiagnostics(
        n_e=effective_size(w),
        n_forecast=joint.size,
        entropy=weight_entropy(w),
        resample_digest=indices_digest(idx),
    )
    return FilterState(posterior=posterior, diagnostics=diag)


# ---------------------------------------------------------------------------
# Sequential assimilation loop
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AssimilationProblem:
    """A twin experiment: dynamics, measurements, timing, and initializers.

    ``sample_truth(rng) -> (truth0, context)`` draws the true initial state
    plus any shared initialization context; ``init_ensemble(n, context, rng)``
    draws the starting members.  The context dictionary always gains a
    ``"y0"`` entry (a noisy observation of the truth at time zero) before
    ``init_ensemble`` sees it, which is how observation-anchored priors are
    built.
    """

    dyn: DynModel
    meas: MeasModel
    integrator: IntegratorConfig
    dt_obs: float
    t_f: float
    n: int
    sample_truth: Callable[[np.random.Generator], tuple[np.ndarray, dict]]
    init_ensemble: Callable[[int, dict, np.random.Generator], np.ndarray]

    def n_steps(self) -> int:
        return int(np.floor(self.t_f / self.dt_obs + 1e-9))


@dataclass
class TruthRun:
    """One realization of the true trajectory and its measurements."""

    times: np.ndarray  # length K+1, starting at 0
    states: np.ndarray  # (N, K+1)
    observations: np.ndarray  # (M, K), at times[1:]
    context: dict


@dataclass
class FilterMethod:
    """Which update to run, plus its trimming/augmentation settings."""

    kind: str  # "enkf" | "tenkf" | "pf"
    trim: TrimConfig | None = None
    augment: AugmentConfig | None = None

    def __post_init__(self):
        if self.kind not in ("enkf", "tenkf", "pf"):
            raise ValueError(f"unknown filter kind {self.kind!r}")
        if self.kind == "tenkf" and self.trim is None:
            raise ValueError("tenkf requires a TrimConfig")


@dataclass
class AssimilationRun:
    """Output of one filter pass over one truth realization."""

    truth: TruthRun
    initial: Ensemble
    steps: list[FilterState]
    rmse: np.ndarray  # per assimilation step, over all members
    rmse_mean: np.ndarray  # per step, ensemble-mean error only


def _advance(problem: AssimilationProblem, x, t0, t1, rng):
    if problem.dyn.transition is not None:
        return np.asarray(problem.dyn.transition(x, t0, rng), dtype=float)
    return integrate(problem.dyn, x, t0, t1, problem.integrator, rng)


def simulate_truth(problem: AssimilationProblem, rng: np.random.Generator) -> TruthRun:
    """Generate the truth trajectory and its noisy measurements."""
    truth0, context = problem.sample_truth(rng)
    truth0 = np.asarray(truth0, dtype=float)
    context = dict(context)
    context["y0"] = np.atleast_1d(observe(problem.meas, truth0, rng))
    k_steps = problem.n_steps()
    times = np.arange(k_steps + 1) * problem.dt_obs
    states = np.empty((truth0.size, k_steps + 1))
    states[:, 0] = truth0
    obs = np.empty((problem.meas.obs_dim, k_steps))
    x = truth0
    for k in range(1, k_steps + 1):
        try:
            x = _advance(problem, x, times[k - 1], times[k], rng)
        except Exception as exc:
            raise type(exc)(f"truth simulation step {k} (t={times[k]:.6g}): {exc}") from exc
        states[:, k] = x
        obs[:, k - 1] = np.atleast_1d(observe(problem.meas, x, rng))
    return TruthRun(times=times, states=states, observations=obs, context=context)


def run_assimilation(
    problem: AssimilationProblem,
    method: FilterMethod,
    rng: np.random.Generator,
    truth: TruthRun | None = None,
) -> AssimilationRun:
    """Alternate forecast and update against a truth realization.

    When ``truth`` is omitted it is simulated first on a spawned child
    stream, so the filter's own draws are unaffected by truth generation.
    Any stage failure is re-raised annotated with the assimilation step.
    """
    from .metrics import ensemble_mean_rmse, ensemble_rmse

    if truth is None:
        truth = simulate_truth(problem, rng.spawn(1)[0])
    members = np.asarray(
        problem.init_ensemble(problem.n, truth.context, rng), dtype=float
    )
    initial = Ensemble(members)
    steps: list[FilterState] = []
    rmse = np.empty(truth.observations.shape[1])
    rmse_mean = np.empty_like(rmse)
    ensemble = initial
    for k in range(truth.observations.shape[1]):
        t0, t1 = truth.times[k], truth.times[k + 1]
        y_star = truth.observations[:, k]
        try:
            joint = forecast(
                ensemble, problem.dyn, problem.meas, problem.integrator,
                t1 - t0, rng, t0=t0,
            )
            aug_diag = None
            if method.kind == "tenkf" and method.augment is not None:
                scale = None
                if method.augment.distance == "normalized-l1":
                    scale = joint.observations.std(axis=1, ddof=1)

                def pipeline(ics, prng):
                    return forecast(
                        Ensemble(ics), problem.dyn, problem.meas,
                        problem.integrator, t1 - t0, prng, t0=t0,
                    )

                joint, aug_diag = augment_forecast(
                    joint, ensemble, y_star, method.augment, pipeline, rng,
                    scale=scale,
                )
            if method.kind == "enkf":
                state = enkf_update(joint, y_star)
            elif method.kind == "tenkf":
                state = tenkf_update(
                    joint, y_star, method.trim, rng, posterior_size=problem.n
                )
            else:
                state = pf_update(joint, y_star, problem.meas, rng)
            if aug_diag is not None:
                state.diagnostics.n_d = aug_diag.n_d
                state.diagnostics.n_aug = aug_diag.n_aug
        except Exception as exc:
            raise type(exc)(f"assimilation step {k + 1} (t={t1:.6g}): {exc}") from exc
        truth_state = truth.states[:, k + 1]
        rmse[k] = ensemble_rmse(state.posterior, truth_state)
        rmse_mean[k] = ensemble_mean_rmse(state.posterior, truth_state)
        steps.append(state)
        ensemble = state.posterior
    return AssimilationRun(
        truth=truth, initial=initial, steps=steps, rmse=rmse, rmse_mean=rmse_mean
    )
