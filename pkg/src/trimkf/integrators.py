"""Time integration: stochastic Heun, fixed-step RK4, adaptive RK45.

The stochastic Heun step uses a trapezoidal update of the drift and an
Euler update of the noise, with the same Gaussian increment appearing in
predictor and corrector.  The adaptive scheme is the Dormand-Prince 5(4)
embedded pair with a PI step controller (safety 0.9, growth clamped to
[0.2, 5.0]).

All steppers accept states of shape ``(N,)`` or ``(N, n)`` (member columns)
as long as the model drift is vectorized; fixed-step results on a batch are
bit-identical to stepping each column alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import DynModel

__all__ = [
    "IntegratorConfig",
    "IntegrationError",
    "heun_sde_step",
    "rk4_step",
    "integrate",
]

SCHEMES = ("stochastic-heun", "rk4", "rk45-adaptive")


class IntegrationError(RuntimeError):
    """Raised when a step produces non-finite values or the adaptive
    controller underflows its minimum step."""


@dataclass(frozen=True)
class IntegratorConfig:
    """Scheme selection and step-control parameters.

    ``dt`` is the fixed step for the fixed-step schemes and the initial
    step guess for the adaptive one.  ``max_steps`` bounds the number of
    attempted adaptive steps per integration interval, so a member
    diverging toward a finite-time blow-up fails fast with a clear error
    instead of grinding the step size down for minutes.
    """

    scheme: str = "rk4"
    dt: float = 0.01
    rtol: float = 1e-6
    atol: float = 1e-9
    max_step: float = np.inf
    min_step: float = 1e-12
    max_steps: int = 100_000

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.scheme == "rk45-adaptive" and (self.rtol <= 0 or self.atol <= 0):
            raise ValueError("rtol and atol must be positive for the adaptive scheme")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")


def _checked_drift(model: DynModel, x: np.ndarray, t: float) -> np.ndarray:
    # Overflow here is a diagnosed failure mode (divergent member), not a bug:
    # evaluate quietly, then raise with the member index.
    with np.errstate(over="ignore", invalid="ignore"):
        f = np.asarray(model.drift(x, t), dtype=float)
    if not np.all(np.isfinite(f)):
        if f.ndim == 2:
            bad = np.nonzero(~np.all(np.isfinite(f), axis=0))[0]
            raise IntegrationError(f"non-finite drift at t={t:.6g} (member {bad[0]})")
        raise IntegrationError(f"non-finite drift at t={t:.6g}")
    return f


def heun_sde_step(
    model: DynModel,
    x: np.ndarray,
    t: float,
    dt: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """One stochastic Heun step of ``dx = f(x,t) dt + sigma dW``.

    Predictor ``xp = x + f(x,t) dt + s`` and corrector
    ``x + dt/2 (f(x,t) + f(xp, t+dt)) + s`` share the same noise increment
    ``s = sigma sqrt(dt) zeta`` with standard-normal ``zeta`` per component.
    """
    x = np.asarray(x, dtype=float)
    f0 = _checked_drift(model, x, t)
    if model.noise_intensity > 0:
        dw = model.noise_intensity * np.sqrt(dt) * rng.standard_normal(x.shape)
    else:
        dw = 0.0
    predictor = x + f0 * dt + dw
    f1 = _checked_drift(model, predictor, t + dt)
    return x + 0.5 * dt * (f0 + f1) + dw


def rk4_step(model: DynModel, x: np.ndarray, t: float, dt: float) -> np.ndarray:
    """Classic fourth-order Runge-Kutta step (deterministic drift only)."""
    x = np.asarray(x, dtype=float)
    k1 = _checked_drift(model, x, t)
    k2 = _checked_drift(model, x + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = _checked_drift(model, x + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = _checked_drift(model, x + dt * k3, t + dt)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


# Dormand-Prince 5(4) tableau.
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# Difference between 5th- and embedded 4th-order weights: the error estimate.
_DP_ERR = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)

_SAFETY = 0.9
_GROW_MIN, _GROW_MAX = 0.2, 5.0
_PI_ALPHA, _PI_BETA = 0.7 / 5.0, 0.4 / 5.0


def _dp_stages(model: DynModel, x: np.ndarray, t: float, dt: float):
    k = [None] * 7
    k[0] = _checked_drift(model, x, t)
    for s in range(1, 7):
        xs = x + dt * sum(a * k[j] for j, a in enumerate(_DP_A[s]) if a != 0.0)
        k[s] = _checked_drift(model, xs, t + _DP_C[s] * dt)
    x5 = x + dt * sum(b * ki for b, ki in zip(_DP_B5, k) if b != 0.0)
    err = dt * sum(e * ki for e, ki in zip(_DP_ERR, k) if e != 0.0)
    return x5, err


def _rk45_adaptive(model, x, t0, t1, cfg):
    """Advance to t1 with embedded 5(4) error control.

    A member block of shape (N, n) is stepped in lockstep: the controlling
    error norm is the worst per-member norm, so every member stays within
    tolerance while the whole block shares one step sequence.
    """
    t = t0
    dt = min(cfg.dt, cfg.max_step, t1 - t0)
    prev_err_norm = 1.0
    steps = 0
    while t < t1:
        steps += 1
        if steps > cfg.max_steps:
            raise IntegrationError(
                f"adaptive step budget exhausted ({cfg.max_steps} steps) at t={t:.6g}"
            )
        dt = min(dt, t1 - t)
        if dt < cfg.min_step:
            raise IntegrationError(
                f"adaptive step underflow: dt={dt:.3e} < min_step={cfg.min_step:.3e} at t={t:.6g}"
            )
        x_new, err = _dp_stages(model, x, t, dt)
        scale = cfg.atol + cfg.rtol * np.maximum(np.abs(x), np.abs(x_new))
        ratios = (err / scale) ** 2
        if ratios.ndim == 2:
            err_norm = float(np.sqrt(np.mean(ratios, axis=0).max()))
        else:
            err_norm = float(np.sqrt(np.mean(ratios)))
        if not np.isfinite(err_norm):
            raise IntegrationError(f"non-finite error estimate at t={t:.6g}")
        if err_norm <= 1.0:
            t += dt
            x = x_new
            # PI controller: uses current and previous accepted error norms.
            factor = _SAFETY * (
                (err_norm + 1e-16) ** -_PI_ALPHA * (prev_err_norm + 1e-16) ** _PI_BETA
            )
            prev_err_norm = err_norm
        else:
            factor = _SAFETY * (err_norm + 1e-16) ** -_PI_ALPHA
        dt = dt * min(_GROW_MAX, max(_GROW_MIN, factor))
        dt = min(dt, cfg.max_step)
    return x


def _fixed_grid_steps(t0: float, t1: float, dt: float):
    """Full steps plus a final partial step landing exactly on t1."""
    span = t1 - t0
    n_full = int(np.floor(span / dt + 1e-9))
    remainder = span - n_full * dt
    if remainder < 1e-9 * max(dt, 1.0):
        remainder = 0.0
    return n_full, remainder


def integrate(
    model: DynModel,
    x0: np.ndarray,
    t0: float,
    t1: float,
    cfg: IntegratorConfig,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Advance a continuous-dynamics state from ``t0`` to ``t1``.

    Fixed-step schemes land exactly on ``t1`` (a final partial step is
    allowed).  Deterministic schemes require ``noise_intensity == 0``;
    stochastic Heun requires an ``rng`` whenever noise is active.
    """
    if model.drift is None:
        raise IntegrationError("integrate requires a drift-based model")
    if t1 < t0:
        raise ValueError("t1 must not precede t0")
    x = np.asarray(x0, dtype=float)
    if t1 == t0:
        return x.copy()

    if cfg.scheme == "stochastic-heun":
        if model.noise_intensity > 0 and rng is None:
            raise ValueError("stochastic integration needs an rng")
        n_full, remainder = _fixed_grid_steps(t0, t1, cfg.dt)
        t = t0
        for _ in range(n_full):
            x = heun_sde_step(model, x, t, cfg.dt, rng)
            t += cfg.dt
        if remainder > 0.0:
            x = heun_sde_step(model, x, t, remainder, rng)
        return x

    if model.noise_intensity > 0:
        raise IntegrationError(
            f"scheme {cfg.scheme!r} is deterministic; model has noise_intensity > 0"
        )

    if cfg.scheme == "rk4":
        n_full, remainder = _fixed_grid_steps(t0, t1, cfg.dt)
        t = t0
        for _ in range(n_full):
            x = rk4_step(model, x, t, cfg.dt)
            t += cfg.dt
        if remainder > 0.0:
            x = rk4_step(model, x, t, remainder)
        return x

    return _rk45_adaptive(model, x, t0, t1, cfg)
