"""Canonical angles and bi-orthogonal bases for pairs of subspaces."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as spla

from .errors import DimensionMismatch, ObliqueAngle, RankDeficient

_ULP = np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """Full-column-rank basis matrix ``V`` of a subspace of ``R^n``."""

    V: np.ndarray
    orthonormal: bool = False

    def __post_init__(self):
        V = np.array(self.V, dtype=float)
        if V.ndim == 1:
            V = V.reshape(-1, 1)
        _check_rank(V)
        if self.orthonormal:
            k = V.shape[1]
            if np.linalg.norm(V.T @ V - np.eye(k), 2) > 1e-12:
                raise RankDeficient("basis flagged orthonormal is not")
        V.setflags(write=False)
        object.__setattr__(self, "V", V)

    @property
    def dim(self):
        return self.V.shape[1]

    def orth(self):
        if self.orthonormal:
            return self.V
        return orthonormalize(self.V)


def _as_basis(U):
    return U.V if isinstance(U, SubspaceBasis) else np.asarray(U, dtype=float)


def _check_rank(V):
    n, k = V.shape
    if k == 0:
        return
    if k > n:
        raise RankDeficient(f"{k} columns cannot be independent in R^{n}")
    s = np.linalg.svd(V, compute_uv=False)
    if not s[-1] > n * _ULP * s[0]:
        raise RankDeficient(f"basis is rank deficient (sigma_min/sigma_max = {s[-1] / max(s[0], 1e-300):.3g})")


def orthonormalize(V):
    """Orthonormal basis of ``range(V)`` via thin QR, after a rank check."""
    V = np.asarray(V, dtype=float)
    _check_rank(V)
    Q, _ = np.linalg.qr(V)
    return Q


def canonical_angles(U, W):
    """Canonical angles between ``range(U)`` and ``range(W)``, ascending.

    Cosines come from the singular values of ``Qw^T Qu``. Angles below pi/4
    are taken from the sines instead, which keeps small angles accurate.
    """
    U = _as_basis(U)
    W = _as_basis(W)
    if U.shape != W.shape:
        raise DimensionMismatch(f"bases must have equal shapes, got {U.shape} and {W.shape}")
    Qu = orthonormalize(U)
    Qw = orthonormalize(W)
    cos = np.clip(np.linalg.svd(Qw.T @ Qu, compute_uv=False), -1.0, 1.0)
    cos = np.sort(cos)[::-1]
    theta = np.arccos(cos)
    # sines of the angles are the singular values of the residual of Qu off range(Qw)
    sin = np.clip(np.linalg.svd(Qu - Qw @ (Qw.T @ Qu), compute_uv=False), -1.0, 1.0)
    sin = np.sort(sin)
    small = cos > np.sqrt(0.5)
    theta[small] = np.arcsin(sin[small])
    return np.clip(np.sort(theta), 0.0, np.pi / 2)


def sin_theta_norm(U, W):
    """Largest sine of the canonical angles, ``||sin Theta||_2``."""
    theta = canonical_angles(U, W)
    if theta.size == 0:
        return 0.0
    return float(min(1.0, np.sin(theta[-1])))


def biorthogonalize(X1, Y1, tol=1e-10):
    """Rescale ``Y1`` within its range so that ``Y1'^T X1 = I``.

    Raises ``ObliqueAngle`` when ``Y1^T X1`` is numerically singular, which
    happens exactly when the two subspaces meet at a right angle.
    """
    X1 = np.asarray(X1, dtype=float)
    Y1 = np.asarray(Y1, dtype=float)
    if X1.shape != Y1.shape:
        raise DimensionMismatch("X1 and Y1 must have the same shape")
    if sin_theta_norm(X1, Y1) >= 1.0 - tol:
        raise ObliqueAngle("range(X1) and range(Y1) contain orthogonal directions")
    M = Y1.T @ X1
    try:
        return Y1 @ np.linalg.inv(M).T
    except np.linalg.LinAlgError:
        raise ObliqueAngle("Y1^T X1 is singular") from None


def _complement(V):
    n, k = V.shape
    Q, _ = np.linalg.qr(V, mode="complete")
    return Q[:, k:]


def biorthogonal_completion(X1, Y1, tol=1e-10):
    """Complete a bi-orthogonal pair to square bases.

    Given ``Y1^T X1 = I_r``, returns ``(X2, Y2)`` with
    ``[Y1, Y2]^T [X1, X2] = I_n``. ``Y2`` is an orthonormal basis of
    ``range(X1)^perp`` and ``X2 = V (Y2^T V)^{-1}`` with ``V`` an orthonormal
    basis of ``range(Y1)^perp``.
    """
    X1 = np.asarray(X1, dtype=float)
    Y1 = np.asarray(Y1, dtype=float)
    n, r = X1.shape
    if Y1.shape != (n, r):
        raise DimensionMismatch("X1 and Y1 must have the same shape")
    if np.linalg.norm(Y1.T @ X1 - np.eye(r), 2) > tol:
        raise ObliqueAngle("Y1^T X1 is not the identity")
    if r == n:
        return np.zeros((n, 0)), np.zeros((n, 0))
    Vt = _complement(X1)
    V = _complement(Y1)
    M = Vt.T @ V
    s = np.linalg.svd(M, compute_uv=False)
    if not s[-1] > n * _ULP:
        raise ObliqueAngle("complements are orthogonal; completion does not exist")
    X2 = spla.solve(M.T, V.T).T
    return X2, Vt
