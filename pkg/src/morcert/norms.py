"""H-infinity, H2 and Hankel norms of stable systems and their differences."""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, TraceMismatch, UnstableA
from .lti import LtiSystem, check_stability, difference_system, eval_transfer, freqresp
from .lyapunov import LyapunovSolver, psd_factor

_ULP = np.finfo(float).eps
_INVPHI = (np.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class FrequencyGrid:
    """Logarithmic frequency grid with golden-section refinement."""

    omega_min: float
    omega_max: float
    points_per_decade: int = 64
    refine_iters: int = 40
    n_peaks: int = 3

    def __post_init__(self):
        if not 0 < self.omega_min < self.omega_max:
            raise ValueError("need 0 < omega_min < omega_max")
        if self.points_per_decade < 4:
            raise ValueError("points_per_decade must be at least 4")

    @classmethod
    def for_matrices(cls, *As, **kw):
        """Default grid covering ``[1e-4 min|lambda|, 1e4 max|lambda|]`` over all given matrices."""
        mags = np.concatenate([np.abs(np.linalg.eigvals(A)) for A in As if A.size])
        mags = mags[mags > 0]
        lo, hi = (mags.min(), mags.max()) if mags.size else (1.0, 1.0)
        return cls(1e-4 * lo, 1e4 * hi, **kw)

    def points(self):
        decades = np.log10(self.omega_max / self.omega_min)
        num = max(int(np.ceil(decades * self.points_per_decade)) + 1, 2)
        return np.logspace(np.log10(self.omega_min), np.log10(self.omega_max), num)


def _sigma_max(sys, omega):
    return float(np.linalg.norm(eval_transfer(sys, 1j * omega), 2))


def _golden_max(f, a, b, iters):
    """Maximize ``f`` over ``[a, b]`` in log-frequency by golden-section search."""
    la, lb = np.log(a), np.log(b)
    c = lb - _INVPHI * (lb - la)
    d = la + _INVPHI * (lb - la)
    fc, fd = f(np.exp(c)), f(np.exp(d))
    best = (fc, np.exp(c)) if fc >= fd else (fd, np.exp(d))
    for _ in range(iters):
        if fc >= fd:
            lb, d, fd = d, c, fc
            c = lb - _INVPHI * (lb - la)
            fc = f(np.exp(c))
            if fc > best[0]:
                best = (fc, np.exp(c))
        else:
            la, c, fc = c, d, fd
            d = la + _INVPHI * (lb - la)
            fd = f(np.exp(d))
            if fd > best[0]:
                best = (fd, np.exp(d))
    return best


def hinf_estimate(sys, grid=None, require_stable=True):
    """Grid estimate of ``sup_omega ||H(i omega)||_2``.

    The grid value is a lower bound on the true norm. Refinement runs a
    golden-section search between the neighbours of the largest grid peaks.

    Returns
    -------
    value : float
    argmax_omega : float
    """
    if require_stable and not check_stability(sys.A)[1]:
        raise UnstableA("H-infinity norm needs a stable system")
    if not np.any(sys.B) or not np.any(sys.C):
        return 0.0, 0.0
    if grid is None:
        grid = FrequencyGrid.for_matrices(sys.A)
    w = np.concatenate([[0.0], grid.points()])
    H = freqresp(sys, w)
    g = np.linalg.svd(H, compute_uv=False)[:, 0]
    k_best = int(np.argmax(g))
    value, arg = float(g[k_best]), float(w[k_best])
    # interior local maxima on the grid, largest first
    peaks = [k for k in range(1, w.size) if g[k] >= g[k - 1] and (k + 1 == w.size or g[k] >= g[k + 1])]
    if g[0] >= g[1]:
        peaks.append(0)
    peaks = sorted(peaks, key=lambda k: -g[k])[: grid.n_peaks]
    f = lambda om: _sigma_max(sys, om)
    for k in peaks:
        lo = w[k - 1] if k > 1 else w[1] * 1e-3
        hi = w[k + 1] if k + 1 < w.size else w[k] * 10
        if k == 0:
            lo, hi = w[1] * 1e-3, w[1]
        v, om = _golden_max(f, lo, hi, grid.refine_iters)
        if v > value:
            value, arg = v, float(om)
    return value, arg


def _trace_tol(sys, P, Q):
    return 1e3 * _ULP * sys.n * (
        np.linalg.norm(sys.B, "fro") ** 2 * np.linalg.norm(Q, 2) + np.linalg.norm(sys.C, "fro") ** 2 * np.linalg.norm(P, 2)
    )


def h2_from_gramians(sys, P, Q, rtol=1e-6):
    """``sqrt(tr(B^T Q B))`` cross-checked against ``sqrt(tr(C^T P C))``."""
    t1 = float(np.trace(sys.B.T @ Q @ sys.B))
    t2 = float(np.trace(sys.C.T @ P @ sys.C))
    if abs(t1 - t2) > rtol * max(abs(t1), abs(t2)) + _trace_tol(sys, P, Q):
        raise TraceMismatch(f"trace forms disagree: {t1:.12g} vs {t2:.12g}")
    return float(np.sqrt(max(0.5 * (t1 + t2), 0.0)))


def h2_norm(sys):
    """H2 norm of a stable system from its Gramians."""
    if not np.any(sys.B) or not np.any(sys.C):
        return 0.0
    solver = LyapunovSolver(sys.A)
    P = solver.solve(sys.B @ sys.B.T)
    Q = solver.solve(sys.C @ sys.C.T, transpose=True)
    return h2_from_gramians(sys, P, Q)


def hankel_norm(P, Q):
    """``sqrt(lambda_max(P Q))`` computed as ``sqrt(lambda_max(R^T P R))`` with ``Q = R R^T``."""
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if P.shape != Q.shape:
        raise DimensionMismatch("P and Q must have equal shapes")
    if not np.any(P) or not np.any(Q):
        return 0.0
    R = psd_factor(Q)
    M = R.T @ P @ R
    lam = np.linalg.eigvalsh(0.5 * (M + M.T))
    return float(np.sqrt(max(lam[-1], 0.0)))


def system_hankel_norm(sys):
    solver = LyapunovSolver(sys.A)
    return hankel_norm(solver.solve(sys.B @ sys.B.T), solver.solve(sys.C @ sys.C.T, transpose=True))


def h2_diff(sys1, sys2):
    """``||H_1 - H_2||_2`` through the Gramians of the difference system."""
    return h2_norm(difference_system(sys1, sys2))


@dataclass(frozen=True)
class NormReport:
    hinf: float
    argmax_omega: float
    h2: float
    hankel: float

    def to_dict(self):
        return {"hinf": self.hinf, "argmax_omega": self.argmax_omega, "h2": self.h2, "hankel": self.hankel}


def norm_report(sys, grid=None):
    """All three norms of a stable system."""
    hinf, arg = hinf_estimate(sys, grid)
    return NormReport(hinf, arg, h2_norm(sys), system_hankel_norm(sys))
