"""Conversions between attitude parameterizations.

Quaternions are ``(..., 4)`` arrays ``[q0, qx, qy, qz]`` (scalar first) with the
Hamilton product, so that ``quat_to_rot(quat_mul(a, b)) == quat_to_rot(a) @
quat_to_rot(b)``.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import HalfTurn, NonUnitAxis, NonUnitQuaternion
from .so3 import ROTATION_TOL, check_rotation, skew, trace

UNIT_TOL = 1e-9
HALF_TURN_TOL = 1e-6
GIMBAL_TOL = 1e-6

QUAT_IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def _check_unit(x: NDArray, exc: type[Exception], what: str) -> None:
    err = np.abs(np.linalg.norm(x, axis=-1) - 1.0)
    if np.any(err > UNIT_TOL):
        raise exc(f"{what} is not unit norm (|norm - 1| = {np.max(err):.3g})")


def angle_axis_to_rot(angle: ArrayLike, axis: ArrayLike) -> NDArray:
    """``I + sin(angle) [u]x + (1 - cos(angle)) [u]x^2`` for a unit axis ``u``."""
    axis = np.asarray(axis, dtype=float)
    _check_unit(axis, NonUnitAxis, "axis")
    angle = np.asarray(angle, dtype=float)[..., None, None]
    K = skew(axis)
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def rot_to_angle_axis(R: ArrayLike) -> tuple[NDArray, NDArray]:
    """Angle in ``[0, pi]`` and unit axis of a rotation (axis ``e1`` at the identity)."""
    return _angle_axis_from_quat(rot_to_quat(R))


def _angle_axis_from_quat(Q: NDArray) -> tuple[NDArray, NDArray]:
    vec = Q[..., 1:]
    s = np.linalg.norm(vec, axis=-1)
    angle = 2.0 * np.arctan2(s, Q[..., 0])
    axis = np.where(
        (s > 0)[..., None], vec / np.where(s > 0, s, 1.0)[..., None], np.array([1.0, 0.0, 0.0])
    )
    return angle, axis


def rot_angle(R: ArrayLike) -> NDArray:
    """Rotation angle of ``R`` in ``[0, pi]``, accurate near 0 and near pi."""
    angle, _ = rot_to_angle_axis(R)
    return angle


def rodriguez_to_rot(rho: ArrayLike) -> NDArray:
    """Rodriguez (Gibbs) vector ``rho = tan(angle / 2) u`` to a rotation matrix."""
    rho = np.asarray(rho, dtype=float)
    n2 = np.sum(rho * rho, axis=-1)[..., None, None]
    outer = rho[..., :, None] * rho[..., None, :]
    return ((1.0 - n2) * np.eye(3) + 2.0 * outer + 2.0 * skew(rho)) / (1.0 + n2)


def rot_to_rodriguez(R: ArrayLike) -> NDArray:
    """Inverse of :func:`rodriguez_to_rot`; raises :class:`HalfTurn` near ``angle = pi``."""
    Q = rot_to_quat(R)
    if np.any(np.abs(Q[..., 0]) < HALF_TURN_TOL):
        raise HalfTurn("Rodriguez parameters are undefined for a half-turn")
    return Q[..., 1:] / Q[..., :1]


def quat_to_rot(Q: ArrayLike) -> NDArray:
    """``(q0^2 - |q|^2) I + 2 q q^T + 2 q0 [q]x``."""
    Q = np.asarray(Q, dtype=float)
    _check_unit(Q, NonUnitQuaternion, "quaternion")
    q0 = Q[..., 0, None, None]
    q = Q[..., 1:]
    qq = np.sum(q * q, axis=-1)[..., None, None]
    return (q0**2 - qq) * np.eye(3) + 2.0 * q[..., :, None] * q[..., None, :] + 2.0 * q0 * skew(q)


def rot_to_quat(R: ArrayLike) -> NDArray:
    """Unit quaternion of a rotation matrix, with ``q0 >= 0``.

    Shepperd's method: the component with the largest magnitude is recovered
    from the diagonal and the others from off-diagonal sums/differences.
    """
    R = check_rotation(R, tol=max(ROTATION_TOL, 1e-8))
    tr = trace(R)
    cand = np.stack([tr, R[..., 0, 0], R[..., 1, 1], R[..., 2, 2]], axis=-1)
    k = np.argmax(cand, axis=-1)

    r = lambda i, j: R[..., i, j]  # noqa: E731
    out = np.empty(R.shape[:-2] + (4,))
    # each row: 4 * q_k * [q0, q1, q2, q3] for the chosen pivot k
    t0 = np.stack([1 + tr, r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1)], axis=-1)
    t1 = np.stack(
        [r(2, 1) - r(1, 2), 1 + 2 * r(0, 0) - tr, r(0, 1) + r(1, 0), r(0, 2) + r(2, 0)], axis=-1
    )
    t2 = np.stack(
        [r(0, 2) - r(2, 0), r(0, 1) + r(1, 0), 1 + 2 * r(1, 1) - tr, r(1, 2) + r(2, 1)], axis=-1
    )
    t3 = np.stack(
        [r(1, 0) - r(0, 1), r(0, 2) + r(2, 0), r(1, 2) + r(2, 1), 1 + 2 * r(2, 2) - tr], axis=-1
    )
    for idx, t in enumerate((t0, t1, t2, t3)):
        sel = k == idx
        out[sel] = t[sel]
    out /= np.linalg.norm(out, axis=-1, keepdims=True)
    return canonical_quat(out)


def canonical_quat(Q: ArrayLike) -> NDArray:
    """Flip the sign of ``Q`` where needed so that ``q0 >= 0``."""
    Q = np.asarray(Q, dtype=float)
    return np.where(Q[..., :1] < 0, -Q, Q)


def quat_mul(Q1: ArrayLike, Q2: ArrayLike) -> NDArray:
    """Hamilton product ``Q1 (.) Q2``, renormalized to unit length."""
    Q1 = np.asarray(Q1, dtype=float)
    Q2 = np.asarray(Q2, dtype=float)
    a0, a = Q1[..., :1], Q1[..., 1:]
    b0, b = Q2[..., :1], Q2[..., 1:]
    scalar = a0 * b0 - np.sum(a * b, axis=-1, keepdims=True)
    vec = a0 * b + b0 * a + np.cross(a, b)
    out = np.concatenate([scalar, vec], axis=-1)
    return out / np.linalg.norm(out, axis=-1, keepdims=True)


def quat_inv(Q: ArrayLike) -> NDArray:
    Q = np.asarray(Q, dtype=float)
    return Q * np.array([1.0, -1.0, -1.0, -1.0])


def quat_to_body(Q: ArrayLike, v: ArrayLike) -> NDArray:
    """Vector part of ``Q^-1 (.) [0, v] (.) Q``, i.e. ``quat_to_rot(Q).T @ v``."""
    Q = np.asarray(Q, dtype=float)
    v = np.asarray(v, dtype=float)
    pure = np.concatenate([np.zeros(v.shape[:-1] + (1,)), v], axis=-1)
    # no renormalization here: the pure quaternion is not unit
    a = _hamilton(quat_inv(Q), pure)
    return _hamilton(a, Q)[..., 1:]


def _hamilton(Q1: NDArray, Q2: NDArray) -> NDArray:
    a0, a = Q1[..., :1], Q1[..., 1:]
    b0, b = Q2[..., :1], Q2[..., 1:]
    return np.concatenate(
        [a0 * b0 - np.sum(a * b, axis=-1, keepdims=True), a0 * b + b0 * a + np.cross(a, b)],
        axis=-1,
    )


def quat_rate(Q: ArrayLike, omega: ArrayLike) -> NDArray:
    """Kinematics ``Q_dot = 0.5 [[0, -w^T], [w, -[w]x]] Q`` for body rate ``w``."""
    Q = np.asarray(Q, dtype=float)
    w = np.asarray(omega, dtype=float)
    q0, q = Q[..., :1], Q[..., 1:]
    return 0.5 * np.concatenate(
        [-np.sum(w * q, axis=-1, keepdims=True), w * q0 - np.cross(w, q)], axis=-1
    )


def quat_exp(omega: ArrayLike, dt: ArrayLike = 1.0) -> NDArray:
    """Unit quaternion of the rotation ``exp([omega]x dt)``."""
    u = np.asarray(omega, dtype=float) * np.asarray(dt, dtype=float)[..., None]
    beta = np.linalg.norm(u, axis=-1, keepdims=True)
    half = 0.5 * beta
    small = beta < 1e-6
    # sin(b/2)/b with its series below the threshold
    c = np.where(small, 0.5 - beta**2 / 48.0, np.sin(half) / np.where(small, 1.0, beta))
    return np.concatenate([np.cos(half), c * u], axis=-1)


class EulerAngles(NamedTuple):
    """Intrinsic Z-Y-X (yaw, pitch, roll) angles in radians."""

    roll: NDArray
    pitch: NDArray
    yaw: NDArray
    gimbal_lock: NDArray


def rot_to_euler(R: ArrayLike) -> EulerAngles:
    """Decompose ``R = Rz(yaw) Ry(pitch) Rx(roll)``.

    At gimbal lock (``|pitch| = pi/2`` within ``GIMBAL_TOL``) yaw is set to 0
    and the whole rotation about the vertical is assigned to roll.
    """
    R = np.asarray(R, dtype=float)
    s = np.clip(-R[..., 2, 0], -1.0, 1.0)
    pitch = np.arcsin(s)
    lock = np.abs(np.abs(pitch) - np.pi / 2) < GIMBAL_TOL
    roll = np.arctan2(R[..., 2, 1], R[..., 2, 2])
    yaw = np.arctan2(R[..., 1, 0], R[..., 0, 0])
    # at lock, R[0,1] and R[1,1] carry roll -/+ yaw; with yaw = 0 pick roll from them
    lock_roll = np.arctan2(s * R[..., 0, 1], R[..., 1, 1])
    roll = np.where(lock, lock_roll, roll)
    yaw = np.where(lock, 0.0, yaw)
    # arctan2 returns -pi for (-0, -x); keep the interval (-pi, pi]
    roll = np.where(roll <= -np.pi, roll + 2 * np.pi, roll)
    yaw = np.where(yaw <= -np.pi, yaw + 2 * np.pi, yaw)
    return EulerAngles(roll, pitch, yaw, lock)


def euler_to_rot(roll: ArrayLike, pitch: ArrayLike, yaw: ArrayLike) -> NDArray:
    roll, pitch, yaw = (np.asarray(a, dtype=float) for a in (roll, pitch, yaw))
    cr, sr = np.cos(roll), np.sin(roll)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cy, sy = np.cos(yaw), np.sin(yaw)
    return np.stack(
        [
            np.stack([cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr], axis=-1),
            np.stack([sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr], axis=-1),
            np.stack([-sp, cp * sr, cp * cr], axis=-1),
        ],
        axis=-2,
    )
