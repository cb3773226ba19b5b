"""Prescribed performance envelope and the error transformation built on it.

The envelope is ``xi(t) = (xi0 - xi_inf) exp(-ell t) + xi_inf``. An error
``dist`` inside ``[0, delta * xi)`` maps to the unconstrained transformed
error ``E = 0.5 ln((delta + dist/xi) / (delta - dist/xi))``, and ``mu`` is the
gain ``dE/d(dist) / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import ConfigInvalid, EnvelopeViolated

GUARD = 1e-9


@dataclass(frozen=True)
class PpfConfig:
    xi0: float = 1.2
    xi_inf: float = 0.04
    ell: float = 4.0
    delta_upper: float = 1.2
    delta_lower: float = 1.2

    def __post_init__(self):
        if not self.xi0 > self.xi_inf > 0:
            raise ConfigInvalid(f"need xi0 > xi_inf > 0, got {self.xi0}, {self.xi_inf}")
        if not self.ell > 0:
            raise ConfigInvalid("decay rate ell must be positive")
        if not self.delta_upper > 0 or self.delta_upper != self.delta_lower:
            raise ConfigInvalid("delta_upper and delta_lower must be equal and positive")
        if self.xi0 > self.delta_upper:
            raise ConfigInvalid("xi0 may not exceed delta")

    @property
    def delta(self) -> float:
        return self.delta_upper


@dataclass(frozen=True)
class PpfSample:
    """Envelope value and its time derivative at one instant."""

    t: float
    xi: float
    xi_dot: float


def xi(t: ArrayLike, cfg: PpfConfig) -> tuple[NDArray, NDArray]:
    """Envelope ``xi(t)`` and its derivative."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be non-negative")
    decay = (cfg.xi0 - cfg.xi_inf) * np.exp(-cfg.ell * t)
    return decay + cfg.xi_inf, -cfg.ell * decay


def sample(t: float, cfg: PpfConfig) -> PpfSample:
    x, xd = xi(t, cfg)
    return PpfSample(float(t), float(x), float(xd))


def transformed_error(dist: ArrayLike, xi_val: ArrayLike, cfg: PpfConfig) -> NDArray:
    """Map an in-envelope distance to the unconstrained transformed error.

    Raises
    ------
    EnvelopeViolated
        When ``dist / xi > delta (1 - 1e-9)`` for any batch member; the
        error's ``mask`` marks which.
    """
    ratio = np.asarray(dist, dtype=float) / np.asarray(xi_val, dtype=float)
    bad = ratio > cfg.delta_upper * (1.0 - GUARD)
    if np.any(bad):
        raise EnvelopeViolated(
            f"distance left the performance envelope (dist/xi = {np.max(ratio):.6g})",
            mask=bad if bad.ndim else None,
        )
    return _log_ratio(ratio, cfg)


def _log_ratio(ratio: NDArray, cfg: PpfConfig) -> NDArray:
    # 0.5 ln((delta + r) / (delta - r)) = atanh(r / delta), exact near r = 0
    return np.arctanh(ratio / cfg.delta_upper)


def saturated_error(
    dist: ArrayLike, xi_val: ArrayLike, cfg: PpfConfig, margin: float = GUARD
) -> tuple[NDArray, NDArray]:
    """Like :func:`transformed_error` but clamps the ratio at the guard band.

    Returns ``(E, breached)``.
    """
    ratio = np.asarray(dist, dtype=float) / np.asarray(xi_val, dtype=float)
    cap = cfg.delta_upper * (1.0 - margin)
    breached = ratio > cap
    return _log_ratio(np.minimum(ratio, cap), cfg), breached


def inverse_transform(E: ArrayLike, xi_val: ArrayLike, cfg: PpfConfig) -> NDArray:
    """``dist = xi (delta e^E - delta e^-E) / (e^E + e^-E)``; saturates at ``xi delta``."""
    E = np.asarray(E, dtype=float)
    # tanh form of the same ratio for delta_lower == delta_upper; stable for large |E|
    z = (cfg.delta_upper - cfg.delta_lower) / 2 + (cfg.delta_upper + cfg.delta_lower) / 2 * np.tanh(E)
    return np.asarray(xi_val, dtype=float) * z


def mu(E: ArrayLike, xi_val: ArrayLike, cfg: PpfConfig) -> NDArray:
    """``(e^{2E} + e^{-2E} + 2) / (8 xi delta)``."""
    E = np.asarray(E, dtype=float)
    return (np.exp(2 * E) + np.exp(-2 * E) + 2.0) / (8.0 * np.asarray(xi_val) * cfg.delta_upper)


def mu_from_dist(dist: ArrayLike, xi_val: ArrayLike, cfg: PpfConfig) -> NDArray:
    """The same gain expressed through the distance instead of ``E``."""
    xi_val = np.asarray(xi_val, dtype=float)
    ratio = np.asarray(dist, dtype=float) / xi_val
    return (1.0 / (cfg.delta_lower + ratio) + 1.0 / (cfg.delta_upper - ratio)) / (4.0 * xi_val)


@dataclass(frozen=True)
class EnvelopeReport:
    passed: bool
    first_breach: int | None
    n_breaches: int


def envelope_check(dist: ArrayLike, xi_series: ArrayLike, start: int = 0) -> EnvelopeReport:
    """Check ``dist[k] < xi[k]`` for every ``k >= start``."""
    dist = np.asarray(dist, dtype=float)
    xi_series = np.asarray(xi_series, dtype=float)
    if dist.shape != xi_series.shape:
        raise ValueError(f"series lengths differ: {dist.shape} vs {xi_series.shape}")
    bad = np.flatnonzero(dist[start:] >= xi_series[start:])
    if bad.size == 0:
        return EnvelopeReport(True, None, 0)
    return EnvelopeReport(False, int(bad[0]) + start, int(bad.size))
