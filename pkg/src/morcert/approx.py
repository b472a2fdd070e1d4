"""Approximate balanced truncation from low-rank Gramian factors."""

import numpy as np

from .balanced import APPROX, GAP_TOL, BtReduction, HankelSpectrum, bt_projectors_classical, hankel_svd
from .errors import DimensionMismatch, RankCollapse
from .lti import project
from .lyapunov import CONTROLLABILITY, OBSERVABILITY


def check_factor_sides(Sf, Rf):
    if Sf.side != CONTROLLABILITY:
        raise ValueError(f"first factor must be a controllability factor, got {Sf.side!r}")
    if Rf.side != OBSERVABILITY:
        raise ValueError(f"second factor must be an observability factor, got {Rf.side!r}")
    if Sf.n != Rf.n:
        raise DimensionMismatch("factors have different state dimensions")


def approx_bt_reduce(sys, Sf, Rf, r, gap_tol=GAP_TOL):
    """Square-root balanced truncation using ``S~ S~^T ~ P`` and ``R~ R~^T ~ Q``.

    With ``S~^T R~ = U~ Sigma~ V~^T``, the projectors are
    ``X~1 = S~ U~1 Sigma~1^{-1/2}`` and ``Y~1 = R~ V~1 Sigma~1^{-1/2}``.
    """
    check_factor_sides(Sf, Rf)
    if Sf.n != sys.n:
        raise DimensionMismatch("factors do not match the system order")
    if int(r) != r or r < 1:
        raise ValueError("order r must be a positive integer")
    r = int(r)
    if r > min(Sf.k, Rf.k):
        raise RankCollapse(f"order {r} exceeds the factor ranks ({Sf.k}, {Rf.k})")
    U, sigma, V, S = hankel_svd(Sf.Z, Rf.Z)
    X1, Y1 = bt_projectors_classical(S, Rf.Z, U, sigma, V, r, gap_tol)
    spectrum = HankelSpectrum.from_values(sigma, sys.n)
    return BtReduction(project(sys, X1, Y1), X1, Y1, spectrum, APPROX, r)
