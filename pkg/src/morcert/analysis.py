"""Analysis-side objects for approximate balanced truncation.

Everything here needs the exact Gramians, or at least the exact residual
factors ``E`` and ``F`` with ``P = S~ S~^T + E E^T`` and
``Q = R~ R~^T + F F^T``. Real reductions never have these. They exist here
so that the error certificate can be built and checked.
"""

from dataclasses import dataclass

import numpy as np

from .approx import check_factor_sides
from .balanced import GAP_TOL, bt_projectors_variant, pad_columns
from .certificate import epsilon_G
from .errors import BoundViolation, DegenerateGap, DimensionMismatch, HypothesisViolated, RankCollapse, SubspaceSwap
from .lti import project
from .lyapunov import psd_difference_factor


def _norm2(M):
    return float(np.linalg.norm(M, 2)) if M.size else 0.0


@dataclass(frozen=True, eq=False)
class GtildePair:
    """``G = [S~, E]^T [R~, F]`` together with its truncation ``G~``.

    ``G~`` keeps only the ``S~^T R~`` block. ``dims`` is ``(r1, p1, r2, p2)``
    after zero padding of ``E``, so that ``r1 + p1 >= r2 + p2``.
    """

    G: np.ndarray
    Gt: np.ndarray
    dims: tuple
    S: np.ndarray
    R: np.ndarray
    eps1: float
    eps2: float
    normP: float
    normQ: float
    eps: float
    measured: float

    @property
    def m1(self):
        return self.G.shape[0]

    @property
    def m2(self):
        return self.G.shape[1]


def assemble_G(Sf, Rf, E, F, eps1=None, eps2=None, tol=1e-10):
    """Build ``G``, ``G~`` and the bound ``||G~ - G||_2 <= eps``.

    Raises ``BoundViolation`` if the measured distance exceeds the bound by
    more than ``tol * max(1, ||G||_2)``.
    """
    St, Rt = Sf.Z, Rf.Z
    E = np.asarray(E, dtype=float).reshape(St.shape[0], -1)
    F = np.asarray(F, dtype=float).reshape(Rt.shape[0], -1)
    if E.shape[0] != St.shape[0] or F.shape[0] != Rt.shape[0] or St.shape[0] != Rt.shape[0]:
        raise DimensionMismatch("factors and residual factors must share the row dimension")
    r1, r2, p2 = St.shape[1], Rt.shape[1], F.shape[1]
    E = pad_columns(E, r2 + p2 - r1)
    p1 = E.shape[1]
    S = np.hstack([St, E])
    R = np.hstack([Rt, F])
    G = S.T @ R
    Gt = np.zeros_like(G)
    Gt[:r1, :r2] = St.T @ Rt
    normP = _norm2(S) ** 2
    normQ = _norm2(R) ** 2
    eps1 = Sf.eps if eps1 is None else float(eps1)
    eps2 = Rf.eps if eps2 is None else float(eps2)
    eps = epsilon_G(eps1, eps2, normP, normQ)
    measured = _norm2(Gt - G)
    if measured > eps + tol * max(1.0, _norm2(G)):
        raise BoundViolation(f"||G~ - G||_2 = {measured:.6g} exceeds eps = {eps:.6g}")
    return GtildePair(G, Gt, (r1, p1, r2, p2), S, R, eps1, eps2, normP, normQ, eps, measured)


def perturbed_pair(G, Gt, eps=None):
    """Wrap an arbitrary matrix pair so that ``svd_split`` can be applied.

    ``eps`` defaults to the measured ``||G~ - G||_2``.
    """
    G = np.asarray(G, dtype=float)
    Gt = np.asarray(Gt, dtype=float)
    if G.shape != Gt.shape or G.shape[0] < G.shape[1]:
        raise DimensionMismatch("need equal shapes with at least as many rows as columns")
    measured = _norm2(Gt - G)
    eps = measured if eps is None else float(eps)
    m1, m2 = G.shape
    return GtildePair(G, Gt, (m1, 0, m2, 0), np.zeros((0, m1)), np.zeros((0, m2)), 0.0, 0.0, 0.0, 0.0, eps, measured)


def _inv_sqrt_gram(M):
    """``(I + M^T M)^{-1/2}`` through a symmetric eigendecomposition."""
    lam, V = np.linalg.eigh(np.eye(M.shape[1]) + M.T @ M)
    return (V / np.sqrt(lam)) @ V.T


def perturbed_basis_distance(g):
    """``||U1_check - U1||_2`` as a function of ``||Gamma||_2``."""
    t = np.sqrt(1 + g * g)
    return float(np.sqrt(2) * g / np.sqrt(t * (t + 1)))


@dataclass(frozen=True, eq=False)
class SvdSplit:
    """Exact SVD of ``G`` tied to the dominant singular structure of ``G~``.

    ``Gamma`` and ``Omega`` rotate ``U1`` and ``V1`` onto the dominant
    left and right singular subspaces of ``G~``. In the rotated bases, ``G~``
    is block diagonal with blocks ``cSigma1`` and ``cSigma2``.
    """

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray
    r: int
    eps: float
    Gamma: np.ndarray
    Omega: np.ndarray
    cU1: np.ndarray
    cU2: np.ndarray
    cV1: np.ndarray
    cV2: np.ndarray
    cSigma1: np.ndarray
    cSigma2: np.ndarray
    delta: float
    delta_under: float
    sigma_r_under: float
    residual: float

    @property
    def sigma1(self):
        return float(self.sigma[0])

    @property
    def sigma_r(self):
        return float(self.sigma[self.r - 1])

    @property
    def sigma_next(self):
        return float(self.sigma[self.r]) if self.r < self.sigma.size else 0.0

    def checks(self):
        """Measured quantities next to the bounds they must satisfy."""
        r = self.r
        eps, du = self.eps, self.delta_under
        t = 2 * eps / du
        gam, om = _norm2(self.Gamma), _norm2(self.Omega)
        S1 = np.diag(self.sigma[:r])
        smin1 = float(np.linalg.svd(self.cSigma1, compute_uv=False)[-1])
        smax2 = float(np.linalg.svd(self.cSigma2, compute_uv=False)[0]) if self.cSigma2.size else 0.0
        dS = _norm2(self.cSigma1 - S1)
        dSinv = _norm2(np.linalg.inv(self.cSigma1) - np.diag(1 / self.sigma[:r]))
        base = (1 + 4 * self.sigma1 / du) * eps
        return {
            "gamma": gam,
            "omega": om,
            "gamma_omega_bound": t,
            "u1_distance": _norm2(self.cU1 - self.U[:, :r]),
            "u1_distance_formula": perturbed_basis_distance(gam),
            "v1_distance": _norm2(self.cV1 - self.V[:, :r]),
            "v1_distance_formula": perturbed_basis_distance(om),
            "sigma_min_c1": smin1,
            "sigma_min_c1_bound": self.sigma_r - eps,
            "sigma_min_c1_weak_bound": self.sigma_r - eps - 2 * eps**2 / du,
            "sigma_max_c2": smax2,
            "sigma_max_c2_bound": self.sigma_next + eps + 2 * eps**2 / du,
            "sigma1_diff": dS,
            "sigma1_diff_bound": base,
            "sigma1_diff_alt_bound": 0.5 * (1 + 1 / np.sqrt(2)) * self.sigma1 * t**2 + 2 * np.sqrt(2) * eps,
            "sigma1_inv_diff": dSinv,
            "sigma1_inv_diff_bound": base / (self.sigma_r * self.sigma_r_under),
            "residual": self.residual,
        }

    def report(self):
        d = {
            "r": self.r,
            "eps": self.eps,
            "sigma1": self.sigma1,
            "sigma_r": self.sigma_r,
            "sigma_r_plus_1": self.sigma_next,
            "delta": self.delta,
            "delta_under": self.delta_under,
            "sigma_r_under": self.sigma_r_under,
            "eps_over_delta_under": self.eps / self.delta_under,
            # alias for reports that call the effective gap omega
            "eps_over_omega": self.eps / self.delta_under,
        }
        d.update(self.checks())
        return d


def svd_split(pair, r, eps=None, gap_tol=GAP_TOL, swap_tol=1e-8):
    """Split ``G`` and ``G~`` around order ``r``.

    Requires ``delta_under = (sigma_r - sigma_{r+1}) - 2 eps > 0`` and
    ``eps / delta_under < 1/2``; raises ``HypothesisViolated`` otherwise.
    """
    G, Gt = pair.G, pair.Gt
    eps = pair.eps if eps is None else float(eps)
    m1, m2 = G.shape
    if not 1 <= r <= m2:
        raise ValueError(f"order r must lie in [1, {m2}]")
    U, sigma, Vt = np.linalg.svd(G, full_matrices=True)
    V = Vt.T
    s1 = sigma[0]
    sr = sigma[r - 1]
    snext = sigma[r] if r < m2 else 0.0
    delta = sr - snext
    if not sr > 0:
        raise RankCollapse(f"sigma_{r} of G is zero")
    if not delta > gap_tol * s1:
        raise DegenerateGap(f"sigma_{r} and sigma_{r + 1} of G are not separated")
    du = delta - 2 * eps
    if not du > 0:
        raise HypothesisViolated("delta_under", du)
    if not eps / du < 0.5:
        raise HypothesisViolated("eps_over_delta_under", eps / du)

    Ut, _, Vtt = np.linalg.svd(Gt, full_matrices=True)
    W1 = Ut[:, :r]
    W1r = Vtt.T[:, :r]
    U1, U2 = U[:, :r], U[:, r:]
    V1, V2 = V[:, :r], V[:, r:]
    A_u = U1.T @ W1
    A_v = V1.T @ W1r
    for M, side in ((A_u, "left"), (A_v, "right")):
        if np.linalg.svd(M, compute_uv=False)[-1] <= swap_tol:
            raise SubspaceSwap(f"dominant {side} singular subspaces of G and G~ are misaligned")
    Gamma = -np.linalg.solve(A_u.T, (U2.T @ W1).T).T
    Omega = np.linalg.solve(A_v.T, (V2.T @ W1r).T).T
    cU1 = (U1 - U2 @ Gamma) @ _inv_sqrt_gram(Gamma)
    cU2 = (U1 @ Gamma.T + U2) @ _inv_sqrt_gram(Gamma.T)
    cV1 = (V1 + V2 @ Omega) @ _inv_sqrt_gram(Omega)
    cV2 = (-V1 @ Omega.T + V2) @ _inv_sqrt_gram(Omega.T)
    cS1 = cU1.T @ Gt @ cV1
    cS2 = cU2.T @ Gt @ cV2
    residual = _norm2(Gt - cU1 @ cS1 @ cV1.T - cU2 @ cS2 @ cV2.T)
    return SvdSplit(
        U, sigma, V, r, eps, Gamma, Omega, cU1, cU2, cV1, cV2, cS1, cS2,
        float(delta), float(du), float(sr - eps), residual,
    )


def setup_projectors(Sf, Rf, split):
    """Projectors ``X~1 = [S~, 0] U1_check`` and ``Y~1 = [R~, 0] V1_check Sigma1_check^{-1}``."""
    r1, r2 = Sf.k, Rf.k
    cS1 = split.cSigma1
    s = np.linalg.svd(cS1, compute_uv=False)
    if not s[-1] > 0:
        raise RankCollapse("the split block Sigma1_check is singular")
    Xt1 = Sf.Z @ split.cU1[:r1]
    Yt1 = np.linalg.solve(cS1.T, (Rf.Z @ split.cV1[:r2]).T).T
    return Xt1, Yt1


@dataclass(frozen=True, eq=False)
class AnalysisSetup:
    """Exact and approximate reductions built from one common SVD of ``G``.

    ``hat`` is reduced with the exact variant projectors ``X1 = S U1`` and
    ``Y1 = R V1 Sigma1^{-1}``. ``tilde`` is reduced with the setup
    projectors. Its transfer function equals that of ``approx_bt_reduce``.
    """

    sys: object
    grams: object
    Sf: object
    Rf: object
    r: int
    pair: GtildePair
    split: SvdSplit
    X1: np.ndarray
    Y1: np.ndarray
    Xt1: np.ndarray
    Yt1: np.ndarray
    hat: object
    tilde: object


def build_analysis(sys, grams, Sf, Rf, r):
    """Run the analysis chain for factors ``Sf``, ``Rf`` and order ``r``."""
    check_factor_sides(Sf, Rf)
    E = psd_difference_factor(grams.P, Sf.Z @ Sf.Z.T)
    F = psd_difference_factor(grams.Q, Rf.Z @ Rf.Z.T)
    pair = assemble_G(Sf, Rf, E, F)
    split = svd_split(pair, r)
    X1, Y1 = bt_projectors_variant(pair.S, pair.R, split.U, split.sigma, split.V, r, gap_tol=0.0, rank_tol=0.0)
    Xt1, Yt1 = setup_projectors(Sf, Rf, split)
    return AnalysisSetup(
        sys, grams, Sf, Rf, r, pair, split, X1, Y1, Xt1, Yt1, project(sys, X1, Y1), project(sys, Xt1, Yt1)
    )
