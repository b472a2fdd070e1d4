"""Dense Lyapunov solvers, Gramians and PSD low-rank truncation.

The solver follows Bartels and Stewart: one real Schur factorization of the
coefficient matrix, then a quasi-triangular Sylvester solve. The Schur form
is cached on a ``LyapunovSolver`` so repeated right-hand sides are cheap.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as spla
from scipy.linalg import lapack

from .errors import ConditionFailed, DimensionMismatch, NotPSD, ResidualTooLarge, UnstableA
from .lti import as_real_matrix, check_stability

_ULP = np.finfo(float).eps
LYAP_RTOL = 1e-10

CONTROLLABILITY = "controllability"
OBSERVABILITY = "observability"


class LyapunovSolver:
    """Solver for ``A X + X A^T + W = 0`` and ``A^T X + X A + W = 0``.

    Parameters
    ----------
    A : (n, n) array
        Stable coefficient matrix.
    check : bool
        Refuse matrices whose spectral abscissa is not below
        ``-1e-10 * ||A||_2``.
    """

    def __init__(self, A, check=True):
        A = as_real_matrix(A, "A")
        if A.shape[0] != A.shape[1]:
            raise DimensionMismatch("A must be square")
        if check:
            abscissa, stable = check_stability(A)
            if not stable:
                raise UnstableA(f"spectral abscissa {abscissa:.3g} is not negative")
        self.A = A
        self.n = A.shape[0]
        self._T, self._Z = spla.schur(A, output="real")
        self._normA_F = np.linalg.norm(A, "fro")

    def solve(self, W, transpose=False, rtol=LYAP_RTOL, symmetric=True):
        """Solve the Lyapunov equation for right-hand side ``W``.

        With ``transpose=False`` the equation is ``A X + X A^T + W = 0``;
        otherwise ``A^T X + X A + W = 0``. The residual is checked against
        ``rtol * (2 ||A||_F ||X||_F + ||W||_F)``.
        """
        W = as_real_matrix(W, "W")
        if W.shape != (self.n, self.n):
            raise DimensionMismatch(f"W must be {self.n} x {self.n}")
        if symmetric:
            asym = np.linalg.norm(W - W.T, "fro")
            if asym > 1e-10 * max(np.linalg.norm(W, "fro"), np.finfo(float).tiny):
                raise DimensionMismatch("W is not symmetric")
        T, Z = self._T, self._Z
        F = -(Z.T @ W @ Z)
        # T Y + Y T^T = F, or T^T Y + Y T = F
        trana, tranb = ("T", "N") if transpose else ("N", "T")
        Y, scale, info = lapack.dtrsyl(T, T, F, trana=trana, tranb=tranb)
        if info < 0:
            raise ValueError(f"dtrsyl: illegal argument {-info}")
        if info == 1:
            raise UnstableA("A and -A have nearly common eigenvalues")
        X = Z @ (Y / scale) @ Z.T
        if symmetric:
            X = 0.5 * (X + X.T)
        A = self.A
        R = A.T @ X + X @ A + W if transpose else A @ X + X @ A.T + W
        res = np.linalg.norm(R, "fro")
        budget = rtol * (2 * self._normA_F * np.linalg.norm(X, "fro") + np.linalg.norm(W, "fro"))
        if res > budget and res > 0:
            raise ResidualTooLarge(f"Lyapunov residual {res:.3g} exceeds {budget:.3g}")
        return X


def solve_lyapunov(A, W, transpose=False):
    """Solve ``A X + X A^T + W = 0`` (or the transposed form) densely."""
    return LyapunovSolver(A).solve(W, transpose=transpose)


@dataclass(frozen=True)
class GramianPair:
    P: np.ndarray
    Q: np.ndarray
    lambda_min_P: float
    lambda_min_Q: float


def gramians(sys):
    """Controllability and observability Gramians of a stable system."""
    solver = LyapunovSolver(sys.A)
    P = solver.solve(sys.B @ sys.B.T)
    Q = solver.solve(sys.C @ sys.C.T, transpose=True)
    return GramianPair(P, Q, float(np.linalg.eigvalsh(P)[0]), float(np.linalg.eigvalsh(Q)[0]))


def psd_clamp_tol(G):
    n = G.shape[0]
    return 10 * n * _ULP * max(np.linalg.norm(G, 2), np.finfo(float).tiny)


def _psd_eigh(G, tol=None):
    G = 0.5 * (G + G.T)
    lam, V = np.linalg.eigh(G)
    if tol is None:
        tol = psd_clamp_tol(G)
    if lam.size and lam[0] < -tol:
        raise NotPSD(f"eigenvalue {lam[0]:.3g} is below -{tol:.3g}")
    lam = np.clip(lam, 0.0, None)
    return lam[::-1], V[:, ::-1]


@dataclass(frozen=True, eq=False)
class GramianFactor:
    """Low-rank factor ``Z`` with ``Z Z^T`` approximating a Gramian from below.

    ``eps`` is the certified spectral error ``||G - Z Z^T||_2``.
    """

    Z: np.ndarray
    eps: float
    side: str = CONTROLLABILITY

    def __post_init__(self):
        Z = np.array(self.Z, dtype=float)
        if Z.ndim == 1:
            Z = Z.reshape(-1, 1)
        if Z.ndim != 2 or Z.shape[1] > Z.shape[0]:
            raise DimensionMismatch(f"factor must be n x k with k <= n, got {Z.shape}")
        if not np.all(np.isfinite(Z)) or not np.isfinite(self.eps) or self.eps < 0:
            raise NotPSD("factor data must be finite and eps >= 0")
        if self.side not in (CONTROLLABILITY, OBSERVABILITY):
            raise ValueError(f"unknown side {self.side!r}")
        Z.setflags(write=False)
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "eps", float(self.eps))

    @property
    def n(self):
        return self.Z.shape[0]

    @property
    def k(self):
        return self.Z.shape[1]

    def to_dict(self):
        return {"n": self.n, "k": self.k, "Z": self.Z.tolist(), "eps": self.eps, "side": self.side}

    @classmethod
    def from_dict(cls, d):
        Z = as_real_matrix(d["Z"], "Z") if len(d["Z"]) else np.zeros((int(d["n"]), 0))
        return cls(Z, float(d["eps"]), d.get("side", CONTROLLABILITY))


def lowrank_truncate(G, rank=None, tol=None, side=CONTROLLABILITY):
    """Eigen-truncation ``G ~ Z Z^T`` that approaches ``G`` from below.

    Keep the ``rank`` largest eigenpairs, or all eigenvalues above ``tol``.
    Then ``Z Z^T <= G`` and ``||G - Z Z^T||_2`` is the first discarded
    eigenvalue, which becomes ``eps``.
    """
    G = as_real_matrix(G, "G")
    n = G.shape[0]
    if (rank is None) == (tol is None):
        raise ValueError("give exactly one of rank or tol")
    lam, V = _psd_eigh(G)
    if rank is not None:
        k = int(rank)
        if not 0 <= k <= n:
            raise ValueError(f"rank must lie in [0, {n}]")
    else:
        k = int(np.count_nonzero(lam > tol))
    k = min(k, int(np.count_nonzero(lam > 0)))
    Z = V[:, :k] * np.sqrt(lam[:k])
    eps = float(lam[k]) if k < n else 0.0
    return GramianFactor(Z, eps, side)


def psd_factor(G):
    """Square factor ``Z`` with ``Z Z^T = G`` from the clamped eigendecomposition."""
    lam, V = _psd_eigh(as_real_matrix(G, "G"))
    return V * np.sqrt(lam)


def psd_difference_factor(G, Gt):
    """Factor ``E`` with ``E E^T = G - Gt`` for ``Gt <= G``.

    Eigenvalues of the difference within ``10 n ulp ||G||_2`` of zero are
    roundoff and dropped; anything more negative raises ``NotPSD``.
    """
    G = as_real_matrix(G, "G")
    Gt = as_real_matrix(Gt, "Gt")
    if G.shape != Gt.shape:
        raise DimensionMismatch("G and Gt must have equal shapes")
    tol = psd_clamp_tol(G)
    lam, V = _psd_eigh(G - Gt, tol=tol)
    keep = lam > tol
    return V[:, keep] * np.sqrt(lam[keep])


SPECTRAL = "spectral"
FROBENIUS = "frobenius"


@dataclass(frozen=True)
class LyapPerturbationInput:
    """Norms entering the Lyapunov perturbation bound.

    ``dA1`` and ``dA2`` are spectral norms of the perturbations of the two
    coefficient matrices; ``normX_ui`` and ``dW_ui`` are measured in
    ``ui_norm``.
    """

    normK: float
    normX_ui: float
    dA1: float
    dA2: float
    dW_ui: float
    ui_norm: str = SPECTRAL

    def __post_init__(self):
        for name in ("normK", "normX_ui", "dA1", "dA2", "dW_ui"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")
        if self.ui_norm not in (SPECTRAL, FROBENIUS):
            raise ValueError(f"unknown norm {self.ui_norm!r}")


def lyap_perturbation_bound(inp):
    """Bound on ``||dX||`` for a perturbed Lyapunov equation.

    For ``A1^T X + X A2 + W = 0`` perturbed to
    ``(A1 + dA1)^T (X + dX) + (X + dX)(A2 + dA2) + W + dW = 0``, with
    ``K`` solving the identity-forced equation, let
    ``eta = ||K|| (||dA1|| + ||dA2||)``. If ``eta < 1`` then
    ``||dX|| <= ||K|| / (1 - eta) * (||dW|| + ||X|| (||dA1|| + ||dA2||))``.

    Returns ``(eta, bound)``; raises ``ConditionFailed`` when ``eta >= 1``.
    """
    s = inp.dA1 + inp.dA2
    eta = inp.normK * s
    if not eta < 1:
        raise ConditionFailed(eta)
    return eta, inp.normK / (1 - eta) * (inp.dW_ui + inp.normX_ui * s)


def hewer_kenney_bound(normK, normA_pert, dA, normW_pert, dW):
    """Relative bound ``2 ||A+dA|| ||K|| (||dA||/||A+dA|| + ||dW||/||W+dW||)``.

    Applies to one coefficient perturbation shared by both sides. Returned
    value bounds ``||dX|| / ||X + dX||``; ``K`` belongs to the unperturbed
    coefficient matrix. No smallness condition on ``dA`` is needed.
    """
    return 2 * normA_pert * normK * (dA / normA_pert + dW / normW_pert)


def two_sided_relative_bound(normK, normA_perts, dAs, normW_pert, dW):
    """Relative bound with separate perturbations on the two sides.

    ``sum_i ||A + dA_i|| ||K|| (||dA_i|| / ||A + dA_i|| + ||dW|| / ||W + dW||)``.
    """
    return float(sum(a * normK * (d / a + dW / normW_pert) for a, d in zip(normA_perts, dAs)))


def stability_gramian_K(Ar):
    """Solutions of ``Ar K1 + K1 Ar^T + I = 0`` and ``Ar^T K2 + K2 Ar + I = 0``."""
    solver = LyapunovSolver(Ar)
    I = np.eye(solver.n)
    return solver.solve(I), solver.solve(I, transpose=True)
