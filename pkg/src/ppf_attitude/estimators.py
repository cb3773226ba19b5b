"""Semi-direct and direct stochastic attitude estimators with a prescribed
performance envelope, in continuous, exact-discrete and quaternion form.

All functions broadcast over leading batch dimensions: the attitude is
``(..., 3, 3)`` (or ``(..., 4)`` for quaternions) and vectors are ``(..., 3)``.
The envelope quantities ``xi`` and ``xi_dot`` are shared by the whole batch.

Both estimators use the same structure::

    R_hat' = R_hat [omega_m - b_hat - W]x
    b_hat' = gamma1 (E + 1) e^E mu Y
    s_hat' = gamma2 (E + 2) e^E mu^2 diag(Y) Y
    W      = 2 (E + 2)/(E + 1) mu diag(Y) s_hat + c Y

where ``Y`` is the anti-symmetric part of the attitude error and ``c`` is the
estimator-specific envelope gain.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import ppf
from .attitude import quat_exp, quat_inv, quat_mul, quat_rate, quat_to_body
from .errors import ConfigInvalid, NearUnstableSet
from .so3 import dist_identity, exp_so3, ups
from .wahba import ObservationSet, meas_dist, meas_j, meas_ups

GUARD = 1e-6

MODES = ("consistent", "literal")


@dataclass(frozen=True)
class Gains:
    gamma1: float = 1.0
    gamma2: float = 0.1
    k_w: float = 3.0

    def __post_init__(self):
        if min(self.gamma1, self.gamma2, self.k_w) <= 0:
            raise ConfigInvalid("estimator gains must be positive")


@dataclass(frozen=True)
class EstimatorState:
    """Attitude estimate (matrix or quaternion), gyro-bias and noise-bound estimates."""

    att: NDArray
    bias: NDArray
    sigma: NDArray

    @classmethod
    def initial(cls, att: ArrayLike, bias=None, sigma=None) -> EstimatorState:
        att = np.array(att, dtype=float)
        batch = att.shape[:-2] if att.shape[-2:] == (3, 3) else att.shape[:-1]
        zeros = np.zeros(batch + (3,))
        bias = zeros if bias is None else np.broadcast_to(np.asarray(bias, float), batch + (3,)).copy()
        sigma = zeros.copy() if sigma is None else np.broadcast_to(np.asarray(sigma, float), batch + (3,)).copy()
        return cls(att, bias, sigma)

    @property
    def is_quaternion(self) -> bool:
        return self.att.shape[-1] == 4


@dataclass(frozen=True)
class CorrectionTerms:
    W: NDArray
    E: NDArray
    mu: NDArray
    dist: NDArray
    ups: NDArray
    # estimator-specific singular denominator: 1 - dist, 1 + J or q0
    denom: NDArray


@dataclass(frozen=True)
class Derivatives:
    omega_eff: NDArray
    bias_dot: NDArray
    sigma_dot: NDArray
    terms: CorrectionTerms
    att_dot: NDArray | None = None


@dataclass(frozen=True)
class FilterSettings:
    """Numerical policy shared by every estimator variant.

    ``mode`` selects the discrete update laws: ``"consistent"`` is a forward
    Euler discretization of the continuous laws and ``"literal"``
    applies the alternative discrete laws term by term (see
    :func:`semi_direct_derivs` and :func:`quat_semi_direct_derivs`).

    By default an envelope breach raises :class:`EnvelopeViolated` and a
    singular denominator raises :class:`NearUnstableSet`. With
    ``explore=True`` both are saturated instead: the ratio ``dist / xi`` is
    clipped at ``delta (1 - ratio_margin)`` and denominators are raised to
    ``denom_floor``.
    """

    mode: str = "consistent"
    explore: bool = False
    guard: float = GUARD
    clamp_sigma: bool = False
    ratio_margin: float = 1e-3
    denom_floor: float = GUARD

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigInvalid(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0 < self.ratio_margin < 1:
            raise ConfigInvalid("ratio_margin must lie in (0, 1)")
        if not self.denom_floor > 0 or not self.guard > 0:
            raise ConfigInvalid("guard and denom_floor must be positive")


DEFAULT_SETTINGS = FilterSettings()


def _error_and_gain(dist, xi, cfg, settings):
    if settings.explore:
        E, _ = ppf.saturated_error(dist, xi, cfg, settings.ratio_margin)
    else:
        E = ppf.transformed_error(dist, xi, cfg)
    return E, ppf.mu(E, xi, cfg)


def _guarded(denom: NDArray, settings: FilterSettings, what: str) -> NDArray:
    bad = denom < settings.guard
    if np.any(bad):
        if not settings.explore:
            raise NearUnstableSet(
                f"{what} = {np.min(denom):.3g} below guard {settings.guard:g}",
                mask=bad if np.ndim(bad) else None,
            )
        denom = np.maximum(denom, settings.denom_floor)
    return denom


def _adaptation(Y, E, mu, sigma_hat, gains, settings, literal_sigma=False):
    """First term of ``W`` and the two adaptation rates."""
    _guarded(E + 1.0, settings, "E + 1")
    e = E[..., None]
    m = mu[..., None]
    ee = np.exp(e)
    W1 = 2.0 * (e + 2.0) / (e + 1.0) * m * Y * sigma_hat
    bias_dot = gains.gamma1 * (e + 1.0) * ee * m * Y
    sigma_dot = gains.gamma2 * (e + 2.0) * ee * m**2 * Y * Y
    if literal_sigma:
        sigma_dot = e * sigma_dot
    return W1, bias_dot, sigma_dot


def _assemble(state, omega_m, Y, E, mu, dist, denom, W2, gains, settings,
              literal_sigma=False, w1_scale=1.0):
    W1, bias_dot, sigma_dot = _adaptation(Y, E, mu, state.sigma, gains, settings, literal_sigma)
    W = w1_scale * W1 + W2
    omega_eff = np.asarray(omega_m, dtype=float) - state.bias - W
    terms = CorrectionTerms(W, E, mu, dist, Y, denom)
    att_dot = quat_rate(state.att, omega_eff) if state.is_quaternion else None
    return Derivatives(omega_eff, bias_dot, sigma_dot, terms, att_dot)


def semi_direct_derivs(
    state: EstimatorState,
    omega_m: ArrayLike,
    R_y: ArrayLike,
    env: ppf.PpfSample,
    cfg: ppf.PpfConfig,
    gains: Gains,
    settings: FilterSettings = DEFAULT_SETTINGS,
    *,
    literal: bool = False,
) -> Derivatives:
    """Rates of the semi-direct estimator given a reconstructed attitude ``R_y``.

    The error is ``R~ = R_y^T R_hat``, ``Y = ups(R~)`` and the envelope gain is
    ``c = 2 (k_w E mu - xi_dot / (4 xi)) / (1 - ||R~||_I)``. With
    ``literal=True`` the alternative discrete variant is used instead:
    ``k_w mu (E + 1)`` in ``c`` and an extra factor ``E`` in ``s_hat'``.
    """
    R_t = np.swapaxes(np.asarray(R_y, dtype=float), -1, -2) @ state.att
    dist = dist_identity(R_t)
    Y = ups(R_t)
    E, mu = _error_and_gain(dist, env.xi, cfg, settings)
    denom = _guarded(1.0 - dist, settings, "1 - ||R~||_I")
    kw_term = gains.k_w * mu * (E + 1.0 if literal else E)
    c = 2.0 * (kw_term - env.xi_dot / (4.0 * env.xi)) / denom
    return _assemble(state, omega_m, Y, E, mu, dist, denom, c[..., None] * Y, gains, settings, literal)


def direct_derivs(
    state: EstimatorState,
    omega_m: ArrayLike,
    obs: ObservationSet,
    env: ppf.PpfSample,
    cfg: ppf.PpfConfig,
    gains: Gains,
    settings: FilterSettings = DEFAULT_SETTINGS,
    *,
    v_hat: NDArray | None = None,
) -> Derivatives:
    """Rates of the direct estimator, fed straight from vector observations.

    ``Y``, the distance and ``J`` come from the observation set (see
    :mod:`ppf_attitude.wahba`); the envelope gain is
    ``c = (4 / lambda_min) (k_w mu E - xi_dot / xi) / (1 + J)``.
    """
    if v_hat is None:
        v_hat = obs.ref @ state.att
    Y = meas_ups(obs, v_hat=v_hat)
    dist = meas_dist(obs, v_hat=v_hat)
    J = meas_j(obs, v_hat=v_hat)
    E, mu = _error_and_gain(dist, env.xi, cfg, settings)
    denom = _guarded(1.0 + J, settings, "1 + J")
    c = 4.0 / obs.lambda_min * (gains.k_w * mu * E - env.xi_dot / env.xi) / denom
    return _assemble(state, omega_m, Y, E, mu, dist, denom, c[..., None] * Y, gains, settings)


def _quat_error(Q_y, Q_hat):
    Qt = quat_mul(quat_inv(Q_y), Q_hat)
    return Qt[..., 0], Qt[..., 1:]


def quat_semi_direct_derivs(
    state: EstimatorState,
    omega_m: ArrayLike,
    Q_y: ArrayLike,
    env: ppf.PpfSample,
    cfg: ppf.PpfConfig,
    gains: Gains,
    settings: FilterSettings = DEFAULT_SETTINGS,
) -> Derivatives:
    """Quaternion form of :func:`semi_direct_derivs`.

    With ``Q~ = Q_y^-1 (.) Q_hat = [q0, q]`` the distance is ``1 - q0^2`` and
    ``ups(R~) = 2 q0 q``. In ``consistent`` mode the matrix laws are applied
    to these, so both forms produce the same trajectory. ``literal``
    uses ``2 drive / q0 * q`` and half the adaptive term, i.e. half of the matrix ``W``.
    """
    q0, q = _quat_error(np.asarray(Q_y, float), state.att)
    dist = np.clip(1.0 - q0**2, 0.0, 1.0)
    E, mu = _error_and_gain(dist, env.xi, cfg, settings)
    Y = 2.0 * q0[..., None] * q
    drive = gains.k_w * E * mu - env.xi_dot / (4.0 * env.xi)
    if settings.mode == "literal":
        # 2 drive / q0 * q: half of the matrix correction
        mag = _guarded(np.abs(q0), settings, "|q0~|")
        denom = np.where(q0 < 0, -mag, mag)
        W2 = (2.0 * drive / denom)[..., None] * q
        return _assemble(state, omega_m, Y, E, mu, dist, denom, W2, gains, settings, w1_scale=0.5)
    denom = _guarded(q0**2, settings, "1 - ||R~||_I")
    W2 = (2.0 * drive / denom)[..., None] * Y
    return _assemble(state, omega_m, Y, E, mu, dist, denom, W2, gains, settings)


def quat_direct_derivs(
    state: EstimatorState,
    omega_m: ArrayLike,
    obs: ObservationSet,
    env: ppf.PpfSample,
    cfg: ppf.PpfConfig,
    gains: Gains,
    settings: FilterSettings = DEFAULT_SETTINGS,
) -> Derivatives:
    """Quaternion form of :func:`direct_derivs`; predicted body vectors are
    obtained as ``Q_hat^-1 (.) [0, ref] (.) Q_hat``."""
    v_hat = quat_to_body(state.att[..., None, :], obs.ref)
    return direct_derivs(state, omega_m, obs, env, cfg, gains, settings, v_hat=v_hat)


# -- integration --------------------------------------------------------------


def _rotate(att: NDArray, omega: NDArray, dt: float) -> NDArray:
    if att.shape[-1] == 4:
        return quat_mul(att, quat_exp(omega, dt))
    return att @ exp_so3(omega, dt)


def step_continuous(
    state: EstimatorState,
    derivs: Derivatives,
    dt: float,
    settings: FilterSettings = DEFAULT_SETTINGS,
) -> EstimatorState:
    """One step: exact exponential for the attitude, forward Euler for the rest."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    sigma = state.sigma + dt * derivs.sigma_dot
    if settings.clamp_sigma:
        sigma = np.maximum(sigma, 0.0)
    return EstimatorState(
        _rotate(state.att, derivs.omega_eff, dt), state.bias + dt * derivs.bias_dot, sigma
    )


def step_rk4(
    state: EstimatorState,
    deriv_fn: Callable[[EstimatorState, float], Derivatives],
    dt: float,
    settings: FilterSettings = DEFAULT_SETTINGS,
    first: Derivatives | None = None,
) -> tuple[EstimatorState, Derivatives]:
    """Classical RK4 weights on the rates, attitude stages via the exponential map.

    ``deriv_fn(stage_state, tau)`` evaluates the rates at ``tau`` into the
    step; measurements are held at their sample value. ``first`` may supply
    rates already evaluated at the start of the step. Returns the new state
    and the first-stage rates (for logging).
    """
    k1 = deriv_fn(state, 0.0) if first is None else first
    s2 = step_continuous(state, k1, dt / 2, settings)
    k2 = deriv_fn(s2, dt / 2)
    s3 = step_continuous(state, k2, dt / 2, settings)
    k3 = deriv_fn(s3, dt / 2)
    s4 = step_continuous(state, k3, dt, settings)
    k4 = deriv_fn(s4, dt)

    def avg(name):
        a = [getattr(k, name) for k in (k1, k2, k3, k4)]
        return (a[0] + 2 * a[1] + 2 * a[2] + a[3]) / 6.0

    mean = replace(k1, omega_eff=avg("omega_eff"), bias_dot=avg("bias_dot"), sigma_dot=avg("sigma_dot"))
    return step_continuous(state, mean, dt, settings), k1


def step_adaptive(
    state: EstimatorState,
    deriv_fn: Callable[[EstimatorState, float], Derivatives],
    dt: float,
    settings: FilterSettings = DEFAULT_SETTINGS,
    max_angle: float = 0.05,
    max_substeps: int = 4096,
    first: Derivatives | None = None,
) -> tuple[EstimatorState, Derivatives]:
    """Euler sub-steps sized so that the correction turns at most ``max_angle``.

    Near the unstable set the correction rate can reach 1e4 rad/s, far too
    stiff for a fixed 1 ms step. Each sub-step length is
    ``max_angle / max ||W||`` over the batch, bounded below by
    ``dt / max_substeps``. Measurements are held over the interval;
    ``first`` may supply the rates at its start. Returns the new state and
    those rates.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    tau = 0.0
    h_min = dt / max_substeps
    while tau < dt * (1.0 - 1e-12):
        d = first if tau == 0.0 and first is not None else deriv_fn(state, tau)
        if first is None:
            first = d
        w = float(np.max(np.linalg.norm(d.terms.W, axis=-1), initial=0.0))
        h = dt - tau if w * (dt - tau) <= max_angle else max(max_angle / w, h_min)
        h = min(h, dt - tau)
        state = step_continuous(state, d, h, settings)
        tau += h
    return state, first


def discrete_envelope(k: int, dt: float, cfg: ppf.PpfConfig) -> ppf.PpfSample:
    """``xi[k]`` at ``t = k dt`` and the backward difference ``(xi[k] - xi[k-1]) / dt``.

    ``xi[-1]`` is the envelope formula extended to ``t = -dt``.
    """
    def f(t):
        return (cfg.xi0 - cfg.xi_inf) * np.exp(-cfg.ell * t) + cfg.xi_inf

    cur = f(k * dt)
    return ppf.PpfSample(k * dt, cur, (cur - f((k - 1) * dt)) / dt)


def step_discrete_semi(
    state: EstimatorState,
    omega_m: ArrayLike,
    R_y: ArrayLike,
    k: int,
    dt: float,
    cfg: ppf.PpfConfig,
    gains: Gains,
    settings: FilterSettings = DEFAULT_SETTINGS,
) -> tuple[EstimatorState, Derivatives]:
    env = discrete_envelope(k, dt, cfg)
    d = semi_direct_derivs(
        state, omega_m, R_y, env, cfg, gains, settings, literal=settings.mode == "literal"
    )
    return step_continuous(state, d, dt, settings), d


def step_discrete_direct(
    state: EstimatorState,
    omega_m: ArrayLike,
    obs: ObservationSet,
    k: int,
    dt: float,
    cfg: ppf.PpfConfig,
    gains: Gains,
    settings: FilterSettings = DEFAULT_SETTINGS,
) -> tuple[EstimatorState, Derivatives]:
    """The discrete direct filter; both modes share the same laws, since the
    literal discrete direct laws coincide with the Euler step of the continuous ones."""
    env = discrete_envelope(k, dt, cfg)
    d = direct_derivs(state, omega_m, obs, env, cfg, gains, settings)
    return step_continuous(state, d, dt, settings), d
