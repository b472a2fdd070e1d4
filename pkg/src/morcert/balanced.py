"""Exact balanced truncation from square-root factors of the Gramians."""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as spla

from .errors import DegenerateGap, DimensionMismatch, NotPSD, RankCollapse, SvdFailure
from .lti import LtiSystem, project
from .lyapunov import gramians, psd_factor

_ULP = np.finfo(float).eps
GAP_TOL = 1e-8

CLASSICAL = "classical_sqrt"
VARIANT = "variant"
APPROX = "approx_sqrt"


@dataclass(frozen=True, eq=False)
class HankelSpectrum:
    """Descending singular values of ``S^T R`` and the numerical rank."""

    sigma: np.ndarray
    r_max: int

    @classmethod
    def from_values(cls, sigma, n=None, rank_tol=None):
        sigma = np.sort(np.clip(np.asarray(sigma, dtype=float), 0.0, None))[::-1]
        if rank_tol is None:
            rank_tol = hankel_rank_tol(n if n is not None else sigma.size)
        s1 = sigma[0] if sigma.size else 0.0
        r_max = int(np.count_nonzero(sigma > rank_tol * s1)) if s1 > 0 else 0
        sigma.setflags(write=False)
        return cls(sigma, r_max)

    def tail_sum(self, r):
        return float(np.sum(self.sigma[r:]))

    def value(self, i):
        """``sigma_i`` with 1-based index; zero past the end."""
        return float(self.sigma[i - 1]) if i <= self.sigma.size else 0.0


def hankel_rank_tol(n):
    return n * _ULP


def pad_columns(S, width):
    """Append zero columns to ``S`` until it has ``width`` columns."""
    extra = width - S.shape[1]
    if extra <= 0:
        return S
    return np.hstack([S, np.zeros((S.shape[0], extra))])


def hankel_svd(S, R):
    """Full SVD ``S^T R = U diag(sigma) V^T`` with ``S`` padded to be at least as wide as ``R``.

    Returns ``(U, sigma, V, S_padded)``. ``U`` is ``m1 x m1``, ``V`` is
    ``m2 x m2`` and ``sigma`` has length ``m2``.
    """
    S = np.asarray(S, dtype=float)
    R = np.asarray(R, dtype=float)
    if S.shape[0] != R.shape[0]:
        raise DimensionMismatch("factors must have the same number of rows")
    S = pad_columns(S, R.shape[1])
    try:
        U, sigma, Vt = np.linalg.svd(S.T @ R, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise SvdFailure(str(exc)) from None
    return U, sigma, Vt.T, S


def _check_order(sigma, r, gap_tol, rank_tol):
    if r < 1:
        raise ValueError("order r must be at least 1")
    if r > sigma.size:
        raise RankCollapse(f"order {r} exceeds the number of Hankel values {sigma.size}")
    s1 = sigma[0]
    if not sigma[r - 1] > rank_tol * s1:
        raise RankCollapse(f"sigma_{r} = {sigma[r - 1]:.3g} is numerically zero")
    nxt = sigma[r] if r < sigma.size else 0.0
    if not sigma[r - 1] > nxt + gap_tol * s1:
        raise DegenerateGap(f"sigma_{r} = {sigma[r - 1]:.6g} and sigma_{r + 1} = {nxt:.6g} are not separated")


def bt_projectors_variant(S, R, U, sigma, V, r, gap_tol=GAP_TOL, rank_tol=None):
    """Projectors ``X1 = S U1`` and ``Y1 = R V1 Sigma1^{-1}``."""
    if rank_tol is None:
        rank_tol = hankel_rank_tol(S.shape[0])
    _check_order(sigma, r, gap_tol, rank_tol)
    S = pad_columns(S, U.shape[0])
    return S @ U[:, :r], R @ V[:, :r] / sigma[:r]


def bt_projectors_classical(S, R, U, sigma, V, r, gap_tol=GAP_TOL, rank_tol=None):
    """Square-root projectors ``X1 = S U1 Sigma1^{-1/2}``, ``Y1 = R V1 Sigma1^{-1/2}``."""
    if rank_tol is None:
        rank_tol = hankel_rank_tol(S.shape[0])
    _check_order(sigma, r, gap_tol, rank_tol)
    S = pad_columns(S, U.shape[0])
    d = 1.0 / np.sqrt(sigma[:r])
    return S @ U[:, :r] * d, R @ V[:, :r] * d


def balancing_transform(S, R, U, sigma, V, construction=CLASSICAL, rank_tol=None):
    """Transformation ``T`` and its inverse that balance the Gramians.

    Classical: ``T = Sigma^{-1/2} V^T R^T`` and ``T^{-1} = S U Sigma^{-1/2}``,
    giving ``T P T^T = T^{-T} Q T^{-1} = Sigma``. Variant:
    ``T = Sigma^{-1} V^T R^T`` and ``T^{-1} = S U`` so that ``T P T^T = I``
    and ``T^{-T} Q T^{-1} = Sigma^2``.
    """
    n = S.shape[0]
    if rank_tol is None:
        rank_tol = hankel_rank_tol(n)
    if sigma.size < n or not sigma[n - 1] > rank_tol * sigma[0]:
        raise RankCollapse("the system is not minimal to working precision")
    S = pad_columns(S, U.shape[0])
    Un, Vn, sn = U[:, :n], V[:, :n], sigma[:n]
    if construction == CLASSICAL:
        d = 1.0 / np.sqrt(sn)
        return (R @ Vn * d).T, S @ Un * d
    if construction == VARIANT:
        return (R @ Vn / sn).T, S @ Un
    raise ValueError(f"unknown construction {construction!r}")


@dataclass(frozen=True, eq=False)
class BtReduction:
    """Reduced system, projectors and Hankel data of a balanced truncation."""

    reduced: LtiSystem
    X1: np.ndarray
    Y1: np.ndarray
    spectrum: HankelSpectrum
    construction: str
    r: int
    bound_lower: float = 0.0
    bound_upper: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def bounds(self):
        return self.bound_lower, self.bound_upper

    def to_dict(self):
        d = self.reduced.to_dict()
        d.update(
            sigma=self.spectrum.sigma.tolist(),
            r=self.r,
            construction=self.construction,
            bound_lower=self.bound_lower,
            bound_upper=self.bound_upper,
        )
        return d


def gramian_factors(P, Q, factorization="eigen"):
    """Square factors ``S, R`` with ``P = S S^T`` and ``Q = R R^T``."""
    if factorization == "eigen":
        return psd_factor(P), psd_factor(Q)
    if factorization == "cholesky":
        try:
            return spla.cholesky(P, lower=True), spla.cholesky(Q, lower=True)
        except np.linalg.LinAlgError:
            raise NotPSD("Gramian is not numerically positive definite; use eigen factors") from None
    raise ValueError(f"unknown factorization {factorization!r}")


def bt_reduce(sys, r, construction=CLASSICAL, factorization="eigen", grams=None, factors=None, gap_tol=GAP_TOL):
    """Balanced truncation of order ``r``.

    The result carries the a-priori interval
    ``sigma_{r+1} <= ||H - H_r||_inf <= 2 sum_{j>r} sigma_j``.

    Parameters
    ----------
    sys : LtiSystem
        Stable system.
    r : int
        Reduced order, ``1 <= r <= n``.
    construction : {"classical_sqrt", "variant"}
    factorization : {"eigen", "cholesky"}
        How to factor the Gramians when ``factors`` is not given.
    grams : GramianPair, optional
    factors : tuple of arrays, optional
        Precomputed ``(S, R)``; may be non-square.
    """
    if int(r) != r or r < 1:
        raise ValueError("order r must be a positive integer")
    r = int(r)
    if factors is None:
        if grams is None:
            grams = gramians(sys)
        factors = gramian_factors(grams.P, grams.Q, factorization)
    S, R = factors
    U, sigma, V, S = hankel_svd(S, R)
    spectrum = HankelSpectrum.from_values(sigma, sys.n)
    if construction == CLASSICAL:
        X1, Y1 = bt_projectors_classical(S, R, U, sigma, V, r, gap_tol)
    elif construction == VARIANT:
        X1, Y1 = bt_projectors_variant(S, R, U, sigma, V, r, gap_tol)
    else:
        raise ValueError(f"unknown construction {construction!r}")
    return BtReduction(
        project(sys, X1, Y1),
        X1,
        Y1,
        spectrum,
        construction,
        r,
        spectrum.value(r + 1),
        2 * spectrum.tail_sum(r),
    )
