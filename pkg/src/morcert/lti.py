"""Continuous-time LTI systems ``x' = A x + B u``, ``y = C^T x``.

The output map is stored as an ``n x p`` matrix ``C`` and the output is
``C^T x``. Transfer functions are therefore ``H(s) = C^T (sI - A)^{-1} B``.
Keep this in mind when importing systems written as ``y = C x``.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as spla

from .errors import DimensionMismatch, EigFailure, InvalidMatrix, SingularShift

_ULP = np.finfo(float).eps


def as_real_matrix(M, name="matrix"):
    """Return ``M`` as a finite 2-D float array."""
    M = np.array(M, dtype=float)
    if M.ndim == 1:
        M = M.reshape(-1, 1)
    if M.ndim != 2:
        raise InvalidMatrix(f"{name} must be two-dimensional, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidMatrix(f"{name} contains NaN or Inf")
    return M


@dataclass(frozen=True, eq=False)
class LtiSystem:
    """State-space triple ``(A, B, C)`` with ``y = C^T x``.

    Parameters
    ----------
    A : (n, n) array
    B : (n, m) array
    C : (n, p) array
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A = as_real_matrix(self.A, "A")
        B = as_real_matrix(self.B, "B")
        C = as_real_matrix(self.C, "C")
        n = A.shape[0]
        if A.shape != (n, n) or n < 1:
            raise DimensionMismatch(f"A must be square and nonempty, got {A.shape}")
        if B.shape[0] != n or B.shape[1] < 1:
            raise DimensionMismatch(f"B must be {n} x m with m >= 1, got {B.shape}")
        if C.shape[0] != n or C.shape[1] < 1:
            raise DimensionMismatch(f"C must be {n} x p with p >= 1, got {C.shape}")
        for name, M in (("A", A), ("B", B), ("C", C)):
            M.setflags(write=False)
            object.__setattr__(self, name, M)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def p(self):
        return self.C.shape[1]

    def transformed(self, T, Tinv=None):
        """Similar system ``(T A T^{-1}, T B, T^{-T} C)``."""
        T = as_real_matrix(T, "T")
        if Tinv is None:
            Tinv = np.linalg.inv(T)
        return LtiSystem(T @ self.A @ Tinv, T @ self.B, Tinv.T @ self.C)

    def to_dict(self):
        return {
            "n": self.n,
            "m": self.m,
            "p": self.p,
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "C": self.C.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        try:
            sys = cls(d["A"], d["B"], d["C"])
        except KeyError as exc:
            raise InvalidMatrix(f"system record lacks field {exc}") from None
        for key in ("n", "m", "p"):
            if key in d and int(d[key]) != getattr(sys, key):
                raise DimensionMismatch(
                    f"declared {key}={d[key]} but matrices give {getattr(sys, key)}"
                )
        return sys


def _check_rcond(lu_piv, anorm, n):
    lu = lu_piv[0]
    gecon = spla.get_lapack_funcs("gecon", (lu,))
    rcond, info = gecon(lu, anorm, norm="1")
    if info != 0 or not rcond > n * _ULP:
        raise SingularShift(f"sI - A is numerically singular (rcond = {rcond:.3g})")


def eval_transfer(sys, s):
    """Evaluate ``C^T (sI - A)^{-1} B`` at the complex point ``s``.

    One LU factorization and a solve with ``m`` right-hand sides. Raises
    ``SingularShift`` when the reciprocal condition estimate of ``sI - A``
    falls below ``n * ulp``.
    """
    n = sys.n
    M = complex(s) * np.eye(n) - sys.A
    with warnings.catch_warnings():
        # exact singularity is reported through the rcond check below
        warnings.simplefilter("ignore", spla.LinAlgWarning)
        lu_piv = spla.lu_factor(M, check_finite=False)
    _check_rcond(lu_piv, np.linalg.norm(M, 1), n)
    X = spla.lu_solve(lu_piv, sys.B.astype(complex), check_finite=False)
    return sys.C.T @ X


def freqresp(sys, omega):
    """Transfer samples at ``s = i*omega`` for an array of frequencies.

    Returns an array of shape ``(len(omega), p, m)``. Uses a batched dense
    solve; points where the shifted matrix is singular raise
    ``SingularShift``.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    n = sys.n
    if omega.size == 0:
        return np.zeros((0, sys.p, sys.m), dtype=complex)
    M = 1j * omega[:, None, None] * np.eye(n)[None] - sys.A[None]
    try:
        X = np.linalg.solve(M, np.broadcast_to(sys.B.astype(complex), (omega.size, n, sys.m)))
    except np.linalg.LinAlgError:
        raise SingularShift("sI - A is singular on the frequency grid") from None
    if not np.all(np.isfinite(X)):
        raise SingularShift("non-finite transfer samples on the frequency grid")
    return np.einsum("ip,kim->kpm", sys.C, X)


def check_stability(A, stability_tol=None):
    """Return ``(abscissa, stable)`` where ``abscissa = max Re eig(A)``.

    ``stable`` is ``abscissa < -stability_tol``. The default tolerance is
    ``1e-10 * ||A||_2``.
    """
    A = as_real_matrix(A, "A")
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatch("A must be square")
    if stability_tol is None:
        stability_tol = 1e-10 * np.linalg.norm(A, 2)
    try:
        lam = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise EigFailure(str(exc)) from None
    abscissa = float(np.max(lam.real))
    return abscissa, bool(abscissa < -stability_tol)


def _stack(first, second, negate_second_output):
    if first.m != second.m or first.p != second.p:
        raise DimensionMismatch(
            f"input/output sizes differ: ({first.m}, {first.p}) vs ({second.m}, {second.p})"
        )
    A = spla.block_diag(first.A, second.A)
    B = np.vstack([first.B, second.B])
    C = np.vstack([first.C, -second.C if negate_second_output else second.C])
    return LtiSystem(A, B, C)


def difference_system(full_red, approx_red):
    """System whose transfer function is ``H_1(s) - H_2(s)``.

    State matrix ``blkdiag(A_1, A_2)``, input ``[B_1; B_2]`` and output map
    ``[C_1; -C_2]``.
    """
    return _stack(full_red, approx_red, True)


def expanded_error_system(full, reduced):
    """Error system of order ``n + r`` with transfer ``H(s) - H_r(s)``."""
    return _stack(full, reduced, True)


def project(sys, X1, Y1):
    """Petrov-Galerkin reduction ``(Y1^T A X1, Y1^T B, X1^T C)``."""
    X1 = np.asarray(X1, dtype=float)
    Y1 = np.asarray(Y1, dtype=float)
    if X1.shape != Y1.shape or X1.shape[0] != sys.n:
        raise DimensionMismatch(f"projector shapes {X1.shape} and {Y1.shape} do not fit n={sys.n}")
    return LtiSystem(Y1.T @ sys.A @ X1, Y1.T @ sys.B, X1.T @ sys.C)
