"""Ensemble containers and weighted-sample primitives.

States are stored column-wise: an ensemble of ``n`` members in ``N``
dimensions is an ``(N, n)`` array, so member ``i`` is column ``i``.  All
routines here are pure functions of their inputs plus an explicit
``numpy.random.Generator``; nothing keeps hidden state.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Ensemble",
    "JointEnsemble",
    "EnsembleError",
    "GainError",
    "sample_mean",
    "cross_covariance",
    "kalman_gain",
    "normalize_weights",
    "effective_size",
    "weight_entropy",
    "resample_indices",
    "bootstrap_resample",
    "indices_digest",
]

# Weights below this are clamped to zero to avoid denormal noise.
_WEIGHT_FLOOR = 1e-300
_NORMALIZATION_TOL = 1e-12


class EnsembleError(ValueError):
    """Raised when an ensemble violates a structural precondition."""


class GainError(np.linalg.LinAlgError):
    """Raised when the observation covariance cannot be factorized."""


@dataclass(frozen=True)
class Ensemble:
    """A column-wise sample of state vectors.

    Parameters
    ----------
    members : ndarray, shape (N, n)
        One state vector per column.
    """

    members: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.members, dtype=float)
        if m.ndim != 2:
            raise EnsembleError(f"members must be 2-D (N, n), got shape {m.shape}")
        if m.shape[1] < 1:
            raise EnsembleError("ensemble must contain at least one member")
        if not np.all(np.isfinite(m)):
            raise EnsembleError("ensemble members must be finite")
        object.__setattr__(self, "members", m)

    @property
    def dim(self) -> int:
        return self.members.shape[0]

    @property
    def size(self) -> int:
        return self.members.shape[1]


@dataclass(frozen=True)
class JointEnsemble:
    """Paired state and observed-forecast samples.

    Column ``i`` of ``states.members`` and of ``observations`` belong to the
    same member; every operation here preserves that pairing.
    """

    states: Ensemble
    observations: np.ndarray

    def __post_init__(self):
        obs = np.asarray(self.observations, dtype=float)
        if obs.ndim != 2:
            raise EnsembleError(f"observations must be 2-D (M, n), got shape {obs.shape}")
        if obs.shape[1] != self.states.size:
            raise EnsembleError(
                f"state and observation member counts differ: "
                f"{self.states.size} vs {obs.shape[1]}"
            )
        if not np.all(np.isfinite(obs)):
            raise EnsembleError("observed forecasts must be finite")
        object.__setattr__(self, "observations", obs)

    @property
    def size(self) -> int:
        return self.states.size

    @property
    def obs_dim(self) -> int:
        return self.observations.shape[0]


def sample_mean(e: Ensemble) -> np.ndarray:
    """Arithmetic mean of the members, one value per state dimension."""
    return e.members.mean(axis=1)


def cross_covariance(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Unbiased sample cross-covariance of two column-wise samples.

    Parameters
    ----------
    x : ndarray, shape (N, n)
    y : ndarray, shape (M, n)

    Returns
    -------
    ndarray, shape (N, M)
        ``(x - mean(x)) @ (y - mean(y)).T / (n - 1)``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    n = x.shape[1]
    if y.shape[1] != n:
        raise EnsembleError(f"member counts differ: {n} vs {y.shape[1]}")
    if n < 2:
        raise EnsembleError("covariance estimation needs at least two members")
    dx = x - x.mean(axis=1, keepdims=True)
    dy = y - y.mean(axis=1, keepdims=True)
    return dx @ dy.T / (n - 1)


def kalman_gain(joint: JointEnsemble, jitter: float = 1e-10) -> np.ndarray:
    """Sample Kalman gain ``C_xy @ C_yy^{-1}`` from a joint forecast ensemble.

    The observation covariance is regularized with ``jitter * trace / M`` on
    the diagonal before the solve; an explicit inverse is never formed.  A
    constant observation ensemble (zero covariance) yields a zero gain, which
    makes the zero-innovation update a no-op.

    Raises
    ------
    GainError
        If the regularized observation covariance cannot be solved; the
        message carries the condition-number diagnostic.
    """
    x = joint.states.members
    y = joint.observations
    c_xy = cross_covariance(x, y)
    c_yy = cross_covariance(y, y)
    m = c_yy.shape[0]
    tr = float(np.trace(c_yy))
    if tr == 0.0:
        if np.all(c_xy == 0.0):
            return np.zeros((x.shape[0], m))
        raise GainError("observation ensemble is constant but cross-covariance is not zero")
    c_reg = c_yy + (jitter * tr / m) * np.eye(m)
    try:
        gain = np.linalg.solve(c_reg, c_xy.T).T
    except np.linalg.LinAlgError as exc:
        raise GainError(
            f"observation covariance solve failed (cond={np.linalg.cond(c_reg):.3e})"
        ) from exc
    if not np.all(np.isfinite(gain)):
        raise GainError(
            f"non-finite Kalman gain (cond={np.linalg.cond(c_reg):.3e})"
        )
    return gain


def normalize_weights(w: np.ndarray) -> np.ndarray:
    """Validate and normalize a weight vector to sum to one.

    Negative entries are rejected; entries below 1e-300 are clamped to zero
    before normalization to avoid denormal underflow.
    """
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise EnsembleError(f"weights must be a non-empty 1-D array, got shape {w.shape}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise EnsembleError("weights must be finite and non-negative")
    w = np.where(w < _WEIGHT_FLOOR, 0.0, w)
    total = w.sum()
    if total <= 0:
        raise EnsembleError("weights sum to zero; cannot normalize")
    w = w / total
    # One more pass for strict normalization after rounding.
    if abs(w.sum() - 1.0) > _NORMALIZATION_TOL:
        w = w / w.sum()
    return w


def effective_size(w: np.ndarray) -> float:
    """Effective sample size ``1 / sum(w_i^2)`` of normalized weights."""
    w = np.asarray(w, dtype=float)
    return 1.0 / float(np.sum(w * w))


def weight_entropy(w: np.ndarray) -> float:
    """Shannon entropy ``-sum(w log w)`` of normalized weights (nats)."""
    w = np.asarray(w, dtype=float)
    nz = w[w > 0]
    return float(-np.sum(nz * np.log(nz)))


def resample_indices(
    w: np.ndarray,
    size: int,
    rng: np.random.Generator,
    scheme: str = "multinomial",
) -> np.ndarray:
    """Draw resampling indices according to a weight vector.

    ``multinomial`` draws each output index independently with probability
    ``w_j`` (the default; duplicates permitted).  ``systematic`` is a
    lower-variance opt-in variant using a single stratified uniform draw.
    """
    w = normalize_weights(w)
    if scheme == "multinomial":
        return rng.choice(w.size, size=size, replace=True, p=w)
    if scheme == "systematic":
        positions = (rng.uniform() + np.arange(size)) / size
        return np.searchsorted(np.cumsum(w), positions).clip(0, w.size - 1)
    raise ValueError(f"unknown resampling scheme: {scheme!r}")


def bootstrap_resample(
    joint: JointEnsemble,
    w: np.ndarray,
    rng: np.random.Generator,
    size: int | None = None,
    scheme: str = "multinomial",
) -> tuple[JointEnsemble, np.ndarray]:
    """Resample a joint ensemble with weights as selection probabilities.

    Each output member is an exact copy of one input (state, observation)
    pair; the pairing is never split.  ``size`` defaults to the input member
    count and may differ from it (used when an augmented forecast ensemble is
    thinned back to the configured size).

    Returns
    -------
    (JointEnsemble, ndarray)
        The resampled ensemble and the chosen indices.
    """
    n_out = joint.size if size is None else int(size)
    if n_out < 1:
        raise EnsembleError("resample size must be positive")
    idx = resample_indices(w, n_out, rng, scheme=scheme)
    resampled = JointEnsemble(
        states=Ensemble(joint.states.members[:, idx]),
        observations=joint.observations[:, idx],
    )
    return resampled, idx


def indices_digest(idx: np.ndarray) -> str:
    """Short stable digest of a resampling index sequence, for diagnostics."""
    return hashlib.blake2b(
        np.ascontiguousarray(idx, dtype=np.int64).tobytes(), digest_size=8
    ).hexdigest()
