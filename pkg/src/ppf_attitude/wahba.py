"""Vector observations, static attitude reconstruction and the
measurement-side quantities consumed by the direct estimator.

The measurement model is ``meas_body ~ R^T ref_inertial``: a body-frame unit
vector is the inertial reference seen through the transposed attitude.
"""

from __future__ import annotations

import logging
from functools import cached_property

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import Collinear, Degenerate, RankDeficient
from .so3 import trace, ups

log = logging.getLogger(__name__)

UNIT_TOL = 1e-9
COLLINEAR_TOL = 1e-6
DEGENERATE_TOL = 1e-9
RANK_TOL = 1e-9
MAX_COND = 1e9
WEIGHT_TOTAL = 3.0


def _unit(x: NDArray) -> NDArray:
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


class ObservationSet:
    """Weighted pairs of (inertial reference, body measurement) unit vectors.

    Parameters
    ----------
    ref, meas : array_like, shape (..., n, 3)
        Unit vectors; leading dimensions are batch dimensions and must
        broadcast against each other.
    weights : array_like, shape (n,)
        Non-negative confidence levels. Rescaled so that they sum to 3.
    validate : bool
        Check unit norms and non-collinearity. Internal callers that build
        sets from already-checked arrays pass ``False``.
    """

    def __init__(self, ref: ArrayLike, meas: ArrayLike, weights: ArrayLike, validate: bool = True):
        ref = np.asarray(ref, dtype=float)
        meas = np.asarray(meas, dtype=float)
        w = np.asarray(weights, dtype=float)
        if validate:
            if ref.shape[-1] != 3 or meas.shape[-1] != 3 or ref.shape[-2] != meas.shape[-2]:
                raise ValueError(f"incompatible shapes {ref.shape} and {meas.shape}")
            if w.shape != (ref.shape[-2],):
                raise ValueError(f"need one weight per observation, got {w.shape}")
            if np.any(w < 0):
                raise ValueError("weights must be non-negative")
            for name, v in (("ref", ref), ("meas", meas)):
                err = np.abs(np.linalg.norm(v, axis=-1) - 1.0)
                if np.any(err > UNIT_TOL):
                    raise ValueError(f"{name} vectors are not unit norm ({np.max(err):.3g})")
            _check_spread(ref)
            _check_spread(meas)
            total = w.sum()
            if total <= 0:
                raise ValueError("weights sum to zero")
            if abs(total - WEIGHT_TOTAL) > 1e-9:
                log.info("rescaling observation weights from sum %.6g to 3", total)
                w = w * (WEIGHT_TOTAL / total)
        self.ref = ref
        self.meas = meas
        self.weights = w

    def __len__(self) -> int:
        return self.ref.shape[-2]

    def __getitem__(self, index) -> ObservationSet:
        """Select along the leading batch dimensions, keeping cached products."""
        out = ObservationSet(self.ref[index], self.meas[index], self.weights, validate=False)
        for name in ("m_body", "m_body_inv_meas", "lambda_min"):
            if name in self.__dict__:
                out.__dict__[name] = self.__dict__[name][index]
        return out

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return np.broadcast_shapes(self.ref.shape[:-2], self.meas.shape[:-2])

    @cached_property
    def m_body(self) -> NDArray:
        return build_m_body(self)

    @cached_property
    def lambda_min(self) -> NDArray:
        return m_bar_and_lambda_min(self.m_body)[1]

    @cached_property
    def m_body_inv_meas(self) -> NDArray:
        """``M^B^-1 meas_i`` for every observation, shape (..., n, 3)."""
        Minv = _inv_sym3(self.m_body)
        return np.einsum("...jk,...nk->...nj", Minv, self.meas)


def _check_spread(v: NDArray) -> None:
    n = v.shape[-2]
    if n < 2:
        raise Collinear("need at least two observations")
    best = np.zeros(v.shape[:-2])
    for i in range(n):
        for j in range(i + 1, n):
            best = np.maximum(best, np.linalg.norm(np.cross(v[..., i, :], v[..., j, :]), axis=-1))
    if np.any(best <= COLLINEAR_TOL):
        raise Collinear("observation vectors are collinear")


def augment_with_cross(obs: ObservationSet, weight: float) -> ObservationSet:
    """Append the normalized cross product of a two-vector set in both frames.

    The new pair gets ``weight``; the original weights are scaled so that the
    total stays 3. ``(1.5, 1.5)`` augmented with 0.2 gives ``(1.4, 1.4, 0.2)``.
    """
    if len(obs) != 2:
        raise ValueError(f"expected exactly two observations, got {len(obs)}")
    if not 0 <= weight < WEIGHT_TOTAL:
        raise ValueError("weight of the cross-product pair must lie in [0, 3)")
    out = []
    for v in (obs.ref, obs.meas):
        c = np.cross(v[..., 0, :], v[..., 1, :])
        n = np.linalg.norm(c, axis=-1, keepdims=True)
        if np.any(n < COLLINEAR_TOL):
            raise Collinear("cannot form a third vector from collinear observations")
        out.append(np.concatenate([v, (c / n)[..., None, :]], axis=-2))
    w = obs.weights * ((WEIGHT_TOTAL - weight) / obs.weights.sum())
    return ObservationSet(out[0], out[1], np.append(w, weight), validate=False)


def build_m_body(obs: ObservationSet) -> NDArray:
    """``M^B = sum_i s_i meas_i meas_i^T``."""
    m = obs.meas
    return np.einsum("n,...ni,...nj->...ij", obs.weights, m, m)


def build_m_inertial(obs: ObservationSet) -> NDArray:
    r = obs.ref
    return np.einsum("n,...ni,...nj->...ij", obs.weights, r, r)


def m_bar_and_lambda_min(M: ArrayLike) -> tuple[NDArray, NDArray]:
    """``Tr(M) I - M`` and its smallest eigenvalue.

    Raises
    ------
    RankDeficient
        If the smallest eigenvalue is not above ``RANK_TOL``.
    """
    M = np.asarray(M, dtype=float)
    Mbar = trace(M)[..., None, None] * np.eye(3) - M
    lam = np.linalg.eigvalsh(Mbar)[..., 0]
    if np.any(lam <= RANK_TOL):
        raise RankDeficient(f"min eigenvalue of Tr(M) I - M is {np.min(lam):.3g}")
    return Mbar, lam


def _inv_sym3(M: NDArray) -> NDArray:
    """Adjugate inverse of symmetric 3x3 matrices with a condition-number check."""
    eig = np.linalg.eigvalsh(M)
    lo, hi = eig[..., 0], np.abs(eig).max(axis=-1)
    if np.any(lo <= 0) or np.any(hi > MAX_COND * lo):
        raise RankDeficient("observation matrix M^B is singular or ill-conditioned")
    a, b, c = M[..., 0, :], M[..., 1, :], M[..., 2, :]
    adj_t = np.stack([np.cross(b, c), np.cross(c, a), np.cross(a, b)], axis=-2)
    det = np.sum(a * adj_t[..., 0, :], axis=-1)
    # rows of adj_t are columns of the adjugate; M symmetric so the transpose is immaterial
    return np.swapaxes(adj_t, -1, -2) / det[..., None, None]


def attitude_profile(obs: ObservationSet) -> NDArray:
    """``B = sum_i s_i ref_i meas_i^T``; the gain ``Tr(R^T B)`` is maximized by the solution."""
    return np.einsum("n,...ni,...nj->...ij", obs.weights, obs.ref, obs.meas)


def svd_wahba(obs: ObservationSet) -> NDArray:
    """Weighted least-squares attitude from vector pairs (Markley's SVD method).

    Minimizes ``sum_i s_i ||meas_i - R^T ref_i||^2``. With ``B = U S V^T``
    the minimizer is ``U diag(1, 1, det(U) det(V)) V^T``.

    Raises
    ------
    Degenerate
        If the second singular value of ``B`` is below ``DEGENERATE_TOL``.
    """
    B = attitude_profile(obs)
    U, S, Vt = np.linalg.svd(B)
    if np.any(S[..., 1] < DEGENERATE_TOL):
        raise Degenerate("attitude profile matrix has rank < 2")
    d = np.linalg.det(U) * np.linalg.det(Vt)
    D = np.ones(B.shape[:-1])
    D[..., 2] = d
    return (U * D[..., None, :]) @ Vt


def davenport_q(obs: ObservationSet) -> NDArray:
    """Davenport's q-method: the same optimum as :func:`svd_wahba` as a quaternion.

    ``Tr(R(Q)^T B) = Q^T K Q`` with
    ``K = [[Tr B, z^T], [z, B + B^T - Tr(B) I]]`` and ``z = 2 ups(B)``;
    the maximizer is the eigenvector of the largest eigenvalue of ``K``.
    Returned with ``q0 >= 0``.
    """
    B = attitude_profile(obs)
    S = np.linalg.svd(B, compute_uv=False)
    if np.any(S[..., 1] < DEGENERATE_TOL):
        raise Degenerate("attitude profile matrix has rank < 2")
    sig = trace(B)
    z = 2.0 * ups(B)
    K = np.empty(B.shape[:-2] + (4, 4))
    K[..., 0, 0] = sig
    K[..., 0, 1:] = z
    K[..., 1:, 0] = z
    K[..., 1:, 1:] = B + np.swapaxes(B, -1, -2) - sig[..., None, None] * np.eye(3)
    _, vecs = np.linalg.eigh(K)
    Q = vecs[..., :, -1]
    Q = Q / np.linalg.norm(Q, axis=-1, keepdims=True)
    return np.where(Q[..., :1] < 0, -Q, Q)


def estimate_body(obs: ObservationSet, R_hat: ArrayLike) -> NDArray:
    """Predicted body vectors ``R_hat^T ref_i``, shape (..., n, 3)."""
    return obs.ref @ np.asarray(R_hat, dtype=float)


def meas_ups(obs: ObservationSet, R_hat: ArrayLike | None = None, *, v_hat=None) -> NDArray:
    """``sum_i (s_i / 2) v_hat_i x meas_i`` = ``ups(M^B R~)`` for exact data."""
    if v_hat is None:
        v_hat = estimate_body(obs, R_hat)
    return 0.5 * np.einsum("n,...ni->...i", obs.weights, np.cross(v_hat, obs.meas))


def meas_dist(obs: ObservationSet, R_hat: ArrayLike | None = None, *, v_hat=None) -> NDArray:
    """``(1/4) sum_i s_i (1 - v_hat_i . meas_i)`` = ``||M^B R~||_I`` for exact data."""
    if v_hat is None:
        v_hat = estimate_body(obs, R_hat)
    dots = np.sum(v_hat * obs.meas, axis=-1)
    return np.maximum(0.25 * np.einsum("n,...n->...", obs.weights, 1.0 - dots), 0.0)


def meas_j(obs: ObservationSet, R_hat: ArrayLike | None = None, *, v_hat=None) -> NDArray:
    """``Tr((sum s_i m_i m_i^T)^-1 sum s_i m_i v_hat_i^T)``; equals ``Tr(R~)`` for exact data."""
    if v_hat is None:
        v_hat = estimate_body(obs, R_hat)
    return np.einsum("n,...ni,...ni->...", obs.weights, v_hat, obs.m_body_inv_meas)
