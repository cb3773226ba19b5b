"""Ground-truth attitude propagation and IMU-style sensor synthesis."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DegenerateVector
from .so3 import exp_so3, project_so3

Profile = Callable[[NDArray], NDArray]

PROJECT_EVERY = 1000


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 stream; identical seeds give identical draws on every platform."""
    return np.random.Generator(np.random.PCG64(seed))


def omega_profile(t: ArrayLike) -> NDArray:
    """Body rate of the reference trajectory, rad/s, shape ``t.shape + (3,)``."""
    t = np.asarray(t, dtype=float)
    return np.stack([np.sin(0.4 * t), np.sin(0.7 * t + np.pi / 4), 0.4 * np.cos(0.3 * t)], axis=-1)


def constant_profile(omega: ArrayLike) -> Profile:
    omega = np.asarray(omega, dtype=float)
    return lambda t: np.broadcast_to(omega, np.shape(t) + (3,)).copy()


@dataclass(frozen=True)
class TruthState:
    t: float
    R: NDArray
    omega: NDArray


def truth_step(state: TruthState, dt: float, profile: Profile = omega_profile) -> TruthState:
    """Advance the true attitude holding the rate constant over the step."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    R = state.R @ exp_so3(state.omega, dt)
    t = state.t + dt
    return TruthState(t, R, profile(np.asarray(t)))


def propagate_truth(
    R0: ArrayLike,
    dt: float,
    n_steps: int,
    profile: Profile = omega_profile,
    project_every: int = PROJECT_EVERY,
) -> tuple[NDArray, NDArray, NDArray]:
    """Times, attitudes ``(n+1, 3, 3)`` and rates ``(n+1, 3)`` of the true motion.

    Same recursion as :func:`truth_step`, with the increments precomputed in
    one vectorized call and re-projection onto SO(3) every ``project_every``
    steps.
    """
    t = np.arange(n_steps + 1) * dt
    omega = profile(t)
    incr = exp_so3(omega[:-1], dt)
    R = np.empty((n_steps + 1, 3, 3))
    R[0] = R0
    cur = np.asarray(R0, dtype=float)
    for k in range(n_steps):
        cur = cur @ incr[k]
        if project_every and (k + 1) % project_every == 0:
            cur = project_so3(cur)
        R[k + 1] = cur
    return t, R, omega


@dataclass(frozen=True)
class GyroModel:
    """Rate gyro with constant bias and Gaussian noise.

    ``mode="sampled"`` draws each sample with standard deviation ``noise_std``.
    ``mode="euler-maruyama"`` treats ``noise_std`` as the diffusion intensity
    and scales the per-sample deviation by ``1/sqrt(dt)``.
    """

    bias: tuple[float, float, float] = (0.0, 0.0, 0.0)
    noise_std: float | tuple[float, float, float] = 0.0
    mode: str = "sampled"

    def __post_init__(self):
        if np.any(np.asarray(self.noise_std) < 0):
            raise ValueError("noise_std must be non-negative")
        if self.mode not in ("sampled", "euler-maruyama"):
            raise ValueError(f"unknown noise mode {self.mode!r}")

    def sample_std(self, dt: float) -> NDArray:
        std = np.broadcast_to(np.asarray(self.noise_std, dtype=float), (3,))
        return std / np.sqrt(dt) if self.mode == "euler-maruyama" else std


def gyro_measure(
    omega_true: ArrayLike, model: GyroModel, dt: float, rng: np.random.Generator
) -> NDArray:
    """``omega_m = omega + b + n`` for one or many samples (``(..., 3)``)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    omega_true = np.asarray(omega_true, dtype=float)
    noise = rng.standard_normal(omega_true.shape) * model.sample_std(dt)
    return omega_true + np.asarray(model.bias) + noise


@dataclass(frozen=True)
class VectorSensorModel:
    """A body-frame direction sensor observing a fixed inertial reference."""

    ref: tuple[float, float, float]
    bias: tuple[float, float, float] = (0.0, 0.0, 0.0)
    noise_std: float = 0.0
    weight: float = 1.0

    @property
    def ref_unit(self) -> NDArray:
        r = np.asarray(self.ref, dtype=float)
        return r / np.linalg.norm(r)


def vector_measure(
    R: ArrayLike, model: VectorSensorModel, rng: np.random.Generator
) -> tuple[NDArray, NDArray]:
    """Normalized ``(ref, meas)`` with ``meas ∝ R^T ref + bias + noise``.

    Noise and bias are added before normalization. ``R`` may be batched.

    Raises
    ------
    DegenerateVector
        If the corrupted body vector is shorter than 1e-9.
    """
    R = np.asarray(R, dtype=float)
    ref = model.ref_unit
    clean = ref @ R  # R^T ref as a row vector
    noise = rng.standard_normal(clean.shape) * model.noise_std
    v = clean + np.asarray(model.bias) + noise
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(n < 1e-9):
        raise DegenerateVector("body vector vanished after adding bias and noise")
    return np.broadcast_to(ref, v.shape).copy(), v / n
