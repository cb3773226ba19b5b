"""SO(3) / so(3) primitives.

Every function accepts arrays with arbitrary leading batch dimensions:
vectors are ``(..., 3)`` and matrices ``(..., 3, 3)``.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import NotAntiSymmetric, NotARotation, SingularInput

ROTATION_TOL = 1e-9
SMALL_ANGLE = 1e-6

_I3 = np.eye(3)


def skew(v: ArrayLike) -> NDArray:
    """Map ``v`` to the anti-symmetric matrix with ``skew(v) @ w == cross(v, w)``."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != 3:
        raise ValueError(f"expected trailing dimension 3, got shape {v.shape}")
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    out = np.zeros(v.shape + (3,))
    out[..., 0, 1] = -z
    out[..., 0, 2] = y
    out[..., 1, 0] = z
    out[..., 1, 2] = -x
    out[..., 2, 0] = -y
    out[..., 2, 1] = x
    return out


def vex(X: ArrayLike, tol: float = ROTATION_TOL) -> NDArray:
    """Inverse of :func:`skew`.

    Raises
    ------
    NotAntiSymmetric
        If ``||X + X^T||_F`` exceeds ``tol`` for any member of the batch.
        Use :func:`ups` to extract the anti-symmetric part of a general matrix.
    """
    X = np.asarray(X, dtype=float)
    asym = np.linalg.norm(X + np.swapaxes(X, -1, -2), axis=(-2, -1))
    if np.any(asym > tol):
        raise NotAntiSymmetric(f"matrix is not anti-symmetric (||X + X^T|| = {np.max(asym):.3g})")
    return np.stack([X[..., 2, 1], X[..., 0, 2], X[..., 1, 0]], axis=-1)


def pa(Y: ArrayLike) -> NDArray:
    """Anti-symmetric projection ``(Y - Y^T) / 2``."""
    Y = np.asarray(Y, dtype=float)
    return 0.5 * (Y - np.swapaxes(Y, -1, -2))


def ups(Y: ArrayLike) -> NDArray:
    """``vex(pa(Y))`` evaluated directly from the off-diagonal entries."""
    Y = np.asarray(Y, dtype=float)
    return 0.5 * np.stack(
        [
            Y[..., 2, 1] - Y[..., 1, 2],
            Y[..., 0, 2] - Y[..., 2, 0],
            Y[..., 1, 0] - Y[..., 0, 1],
        ],
        axis=-1,
    )


def trace(A: ArrayLike) -> NDArray:
    A = np.asarray(A, dtype=float)
    return A[..., 0, 0] + A[..., 1, 1] + A[..., 2, 2]


def dist_identity(R: ArrayLike) -> NDArray:
    """Normalized Euclidean distance of a rotation from the identity.

    ``Tr(I - R) / 4``, which is 0 at the identity and 1 on half turns.
    Clamped to ``[0, 1]`` so that roundoff never yields ``-1e-17``.
    """
    return np.clip(0.25 * (3.0 - trace(R)), 0.0, 1.0)


def exp_so3(omega: ArrayLike, dt: ArrayLike = 1.0) -> NDArray:
    """Rotation reached by turning at constant body rate ``omega`` for ``dt``.

    Rodrigues' formula on ``u = omega * dt``; below ``SMALL_ANGLE`` rad the
    second-order series ``I + [u]x + [u]x^2 / 2`` replaces it.
    """
    u = np.asarray(omega, dtype=float) * np.asarray(dt, dtype=float)[..., None]
    beta = np.linalg.norm(u, axis=-1)
    small = beta < SMALL_ANGLE
    safe = np.where(small, 1.0, beta)
    # coefficients of [u]x and [u]x^2
    a = np.where(small, 1.0, np.sin(safe) / safe)
    b = np.where(small, 0.5, (1.0 - np.cos(safe)) / safe**2)
    K = skew(u)
    return _I3 + a[..., None, None] * K + b[..., None, None] * (K @ K)


def check_rotation(R: ArrayLike, tol: float = ROTATION_TOL) -> NDArray:
    """Return ``R`` as a float array after validating orthonormality and det."""
    R = np.asarray(R, dtype=float)
    if R.shape[-2:] != (3, 3):
        raise NotARotation(f"expected (..., 3, 3), got {R.shape}")
    if not np.all(np.isfinite(R)):
        raise NotARotation("non-finite entries")
    ortho = np.linalg.norm(np.swapaxes(R, -1, -2) @ R - _I3, axis=(-2, -1))
    det = np.linalg.det(R)
    if np.any(ortho > tol) or np.any(np.abs(det - 1.0) > tol):
        raise NotARotation(
            f"not a rotation (||R^T R - I|| = {np.max(ortho):.3g}, det = {np.min(det):.12g})"
        )
    return R


def is_rotation(R: ArrayLike, tol: float = ROTATION_TOL) -> bool:
    try:
        check_rotation(R, tol)
    except NotARotation:
        return False
    return True


def project_so3(M: ArrayLike, rcond: float = 1e-12) -> NDArray:
    """Nearest rotation to ``M`` in the Frobenius norm.

    Orthogonal polar factor ``U diag(1, 1, det(U V^T)) V^T`` from the SVD.

    Raises
    ------
    SingularInput
        If the smallest singular value is below ``rcond`` times the largest.
    """
    M = np.asarray(M, dtype=float)
    U, S, Vt = np.linalg.svd(M)
    if np.any(S[..., 2] <= rcond * S[..., 0]):
        raise SingularInput("matrix is rank deficient")
    d = np.sign(np.linalg.det(U @ Vt))
    D = np.ones(M.shape[:-1])
    D[..., 2] = d
    return (U * D[..., None, :]) @ Vt
