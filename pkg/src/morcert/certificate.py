"""A-priori error certificate for approximate balanced truncation.

The scalars form a cascade. The Gramian errors ``eps1, eps2`` bound the
distance ``eps`` between ``G~`` and ``G``. That gives projector errors
``eps_x, eps_y``, then coefficient errors ``eps_a ... eps_c2``, then
Gramian block errors ``xi, zeta`` of the difference system, and finally
bounds on the transfer-function difference. Key names follow the Greek
glossary (``eps_x``, ``eta1``, ``zeta2`` and so on).
"""

from dataclasses import dataclass, field, fields

import numpy as np

from .errors import EtaTooLarge, HypothesisViolated, UnstableA

NOTES = (
    "eps_d_inf uses the product (xi1 + xi2) * (zeta1 + zeta2) in its last term",
    "eta_i = ||K_i||_2 ||A||_2 eps_a, since eps_a bounds ||A11~ - A11^|| relative to ||A||_2",
    "zeta1, zeta2 carry the factor ||Q11||_2 = sigma_1^2 contributed by the unperturbed solution",
    "eps_d_inf bounds sqrt(lambda_max(P_d Q_d)), the Hankel norm of the difference system",
    "the C-side eps_d_2 uses sqrt(min(r, p))",
    "the setup hypothesis eps/omega < 1/2 is read as eps/delta_under < 1/2",
)


def epsilon_G(eps1, eps2, normP, normQ):
    """``max(sqrt(||P|| eps2), sqrt(||Q|| eps1)) + sqrt(eps1 eps2)``."""
    for v in (eps1, eps2, normP, normQ):
        if v < 0:
            raise ValueError("inputs must be nonnegative")
    return max(np.sqrt(normP * eps2), np.sqrt(normQ * eps1)) + np.sqrt(eps1 * eps2)


def projector_bounds(eps, delta_under, sigma_r, sigma_r_under, sigma1, normP, normQ, eps1, eps2):
    """Bounds ``eps_x >= ||X~1 - X1||_2`` and ``eps_y >= ||Y~1 - Y1||_2``."""
    if not delta_under > 0:
        raise HypothesisViolated("delta_under", delta_under)
    if not sigma_r_under > 0:
        raise HypothesisViolated("sigma_r_under", sigma_r_under)
    t = 2 * eps / delta_under
    eps_x = np.sqrt(eps1) + np.sqrt(normP) * t
    eps_y = np.sqrt(eps2) / sigma_r + np.sqrt(normQ) / sigma_r * (
        1 + delta_under / (2 * sigma_r_under) + 2 * sigma1 / sigma_r_under
    ) * t
    return float(eps_x), float(eps_y)


def coeff_bounds(eps_x, eps_y, normP, normQ, sigma_r, sigma_r_under):
    """Relative coefficient errors ``(eps_a, eps_b, eps_c, eps_b2, eps_c2)``.

    Two versions of ``eps_a`` exist, one with ``sigma_r`` and one with
    ``sigma_r_under``. The smaller one is used.
    """
    sP, sQ = np.sqrt(normP), np.sqrt(normQ)
    eps_a = min(sP * eps_y + sQ / sigma_r * eps_x, sP * eps_y + sQ / sigma_r_under * eps_x)
    eps_b2 = sQ * (1 / sigma_r_under + 1 / sigma_r) * eps_y
    eps_c2 = 2 * sP * eps_x
    return float(eps_a), float(eps_y), float(eps_x), float(eps_b2), float(eps_c2)


def etas(normK1, normK2, normA, eps_a):
    return normK1 * normA * eps_a, normK2 * normA * eps_a


def gramian_diff_bounds(
    normK1, normK2, normA, normB, normC, normB1hat, normC1hat,
    eps_a, eps_b, eps_c, eps_b2, eps_c2, sigma1, normBBt=None, normCCt=None,
):
    """Bounds on the Gramian blocks of the difference system.

    Returns ``(eta1, eta2, xi1, xi2, zeta1, zeta2)``, where
    ``xi1 >= ||dP12||``, ``xi2 >= ||dP22||``, ``zeta1 >= ||dQ12||`` and
    ``zeta2 >= ||dQ22||``. Raises ``EtaTooLarge`` unless both etas are
    below 1/2.
    """
    normBBt = normB**2 if normBBt is None else normBBt
    normCCt = normC**2 if normCCt is None else normCCt
    eta1, eta2 = etas(normK1, normK2, normA, eps_a)
    for i, eta in ((1, eta1), (2, eta2)):
        if not eta < 0.5:
            raise EtaTooLarge(i, eta)
    dA = normA * eps_a
    s2 = sigma1**2
    xi1 = normK1 / (1 - eta1) * (normB1hat * normB * eps_b + dA)
    xi2 = normK1 / (1 - 2 * eta1) * (normBBt * eps_b2 + 2 * dA)
    zeta1 = normK2 / (1 - eta2) * (normC1hat * normC * eps_c + s2 * dA)
    zeta2 = normK2 / (1 - 2 * eta2) * (normCCt * eps_c2 + 2 * s2 * dA)
    return tuple(float(v) for v in (eta1, eta2, xi1, xi2, zeta1, zeta2))


def transfer_diff_bounds(
    sigma1, xi1, xi2, zeta1, zeta2, r, m, p,
    normB, normC, normB1hat, normB1t, normC1hat, normC1t, eps_b, eps_c,
):
    """Bounds on ``H_BT - H~_BT``.

    Returns ``(eps_d_inf, eps_d_2_B, eps_d_2_C, eps_d_2)``. ``eps_d_2`` is
    the smaller of the input-side and output-side H2 bounds.
    """
    xs, zs = xi1 + xi2, zeta1 + zeta2
    eps_d_inf = np.sqrt(2 * sigma1**2 * xs + 2 * zs + xs * zs)
    b_side = min(r, m) * (
        sigma1**2 * (normB1hat + normB1t) * normB * eps_b + 2 * normB1hat * normB1t * zeta1 + normB1t**2 * zeta2
    )
    c_side = min(r, p) * (
        (normC1hat + normC1t) * normC * eps_c + 2 * normC1hat * normC1t * xi1 + normC1t**2 * xi2
    )
    eB, eC = np.sqrt(b_side), np.sqrt(c_side)
    return float(eps_d_inf), float(eB), float(eC), float(min(eB, eC))


def final_bounds(sigma, r, eps_d_inf, eps_d_2, h2_bt_measured):
    """``(2 sum_{k>r} sigma_k + eps_d_inf, ||H - H_BT||_2 + eps_d_2)``."""
    tail = 2 * float(np.sum(np.asarray(sigma)[r:]))
    return tail + eps_d_inf, h2_bt_measured + eps_d_2


def reduced_norm_bounds(normA, normB, normC, normP, normQ, sigma_r, eps_a, eps_b, eps_c):
    """Upper bounds on the norms of both reduced triples (variant realization)."""
    sP, sQ = np.sqrt(normP), np.sqrt(normQ)
    a = sP * sQ / sigma_r
    b = sQ / sigma_r
    return {
        "A11_hat": a * normA,
        "A11_tilde": (a + eps_a) * normA,
        "B1_hat": b * normB,
        "B1_tilde": (b + eps_b) * normB,
        "C1_hat": sP * normC,
        "C1_tilde": (sP + eps_c) * normC,
    }


def first_order_summary(eps1, eps2, normP, normQ, sigma1, sigma_r, delta, normK1, normK2, normA, normB, normC, r, m, p):
    """Leading-order terms of the cascade in ``eps_app = max(eps1, eps2)``.

    Every term is proportional to ``sqrt(eps_app)`` except the transfer
    bounds, which scale like ``eps_app^{1/4}``.
    """
    e = max(eps1, eps2)
    se = np.sqrt(e)
    rho = max(np.sqrt(normP), np.sqrt(normQ))
    t = 2 * rho**2 / delta
    eps_x = (1 + t) * se
    eps_y = (1 + (1 + delta / (2 * sigma_r) + 2 * sigma1 / sigma_r) * t) * se / sigma_r
    eps_a = rho / sigma_r * eps_x + rho * eps_y
    eps_b, eps_c = eps_y, eps_x
    eps_b2 = 2 * rho / sigma_r * eps_y
    eps_c2 = 2 * rho * eps_x
    s2 = sigma1**2
    xi1 = normK1 * (normA * eps_a + rho / sigma_r * normB**2 * eps_b)
    xi2 = normK1 * (2 * normA * eps_a + normB**2 * eps_b2)
    zeta1 = normK2 * (s2 * normA * eps_a + rho * normC**2 * eps_c)
    zeta2 = normK2 * (2 * s2 * normA * eps_a + normC**2 * eps_c2)
    eps_d_inf = np.sqrt(2 * s2 * (xi1 + xi2) + 2 * (zeta1 + zeta2))
    eps_d_2_B = np.sqrt(min(r, m)) * normB * np.sqrt(2 * s2 * rho / sigma_r * eps_b + (rho / sigma_r) ** 2 * (2 * zeta1 + zeta2))
    eps_d_2_C = np.sqrt(min(r, p)) * normC * np.sqrt(2 * rho * eps_c + rho**2 * (2 * xi1 + xi2))
    out = {
        "eps_app": e,
        "rho": rho,
        "eps": rho * se,
        "eps_x": eps_x,
        "eps_y": eps_y,
        "eps_a": eps_a,
        "eps_b": eps_b,
        "eps_c": eps_c,
        "eps_b2": eps_b2,
        "eps_c2": eps_c2,
        "xi1": xi1,
        "xi2": xi2,
        "zeta1": zeta1,
        "zeta2": zeta2,
        "eps_d_inf": eps_d_inf,
        "eps_d_2_B": eps_d_2_B,
        "eps_d_2_C": eps_d_2_C,
    }
    return {k: float(v) for k, v in out.items()}


@dataclass
class ErrorCertificate:
    """Flat record of all certificate scalars.

    Fields downstream of the eta test stay ``None`` when the certificate is
    inapplicable.
    """

    eps1: float
    eps2: float
    eps_app: float
    eps: float = None
    normP: float = None
    normQ: float = None
    sigma1: float = None
    sigma_r: float = None
    delta: float = None
    delta_under: float = None
    sigma_r_under: float = None
    eps_x: float = None
    eps_y: float = None
    eps_a: float = None
    eps_b: float = None
    eps_c: float = None
    eps_b2: float = None
    eps_c2: float = None
    normK1: float = None
    normK2: float = None
    eta1: float = None
    eta2: float = None
    xi1: float = None
    xi2: float = None
    zeta1: float = None
    zeta2: float = None
    eps_d_inf: float = None
    eps_d_2_B: float = None
    eps_d_2_C: float = None
    eps_d_2: float = None
    bt_upper: float = None
    final_inf: float = None
    h2_bt_measured: float = None
    final_h2: float = None
    applicable: bool = False
    reason: str = ""
    first_order_flags: dict = field(default_factory=dict)
    notes: list = field(default_factory=lambda: list(NOTES))

    def to_dict(self):
        d = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "first_order_flags":
                for k, x in v.items():
                    d[f"lead_{k}"] = x
            else:
                d[f.name] = v
        return d

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        kw = {k: v for k, v in d.items() if k in names}
        kw["first_order_flags"] = {k[5:]: v for k, v in d.items() if k.startswith("lead_")}
        return cls(**kw)


def certify(setup, h2_bt_measured=None):
    """Evaluate the full cascade on an ``AnalysisSetup``.

    ``h2_bt_measured`` is ``||H - H_BT||_2`` for the exact reduction. It is
    computed here when not supplied.
    """
    from .lti import expanded_error_system
    from .lyapunov import stability_gramian_K
    from .norms import h2_norm

    sys, pair, split = setup.sys, setup.pair, setup.split
    r = setup.r
    cert = ErrorCertificate(pair.eps1, pair.eps2, max(pair.eps1, pair.eps2))
    cert.eps, cert.normP, cert.normQ = pair.eps, pair.normP, pair.normQ
    cert.sigma1, cert.sigma_r = split.sigma1, split.sigma_r
    cert.delta, cert.delta_under, cert.sigma_r_under = split.delta, split.delta_under, split.sigma_r_under
    cert.eps_x, cert.eps_y = projector_bounds(
        pair.eps, split.delta_under, split.sigma_r, split.sigma_r_under, split.sigma1,
        pair.normP, pair.normQ, pair.eps1, pair.eps2,
    )
    cert.eps_a, cert.eps_b, cert.eps_c, cert.eps_b2, cert.eps_c2 = coeff_bounds(
        cert.eps_x, cert.eps_y, pair.normP, pair.normQ, split.sigma_r, split.sigma_r_under
    )
    cert.bt_upper = 2 * float(np.sum(split.sigma[r:]))
    normA = np.linalg.norm(sys.A, 2)
    normB = np.linalg.norm(sys.B, 2)
    normC = np.linalg.norm(sys.C, 2)
    hat, tilde = setup.hat, setup.tilde
    try:
        K1, K2 = stability_gramian_K(hat.A)
    except UnstableA as exc:
        cert.reason = f"reduced state matrix is not stable: {exc}"
        return cert
    cert.normK1 = float(np.linalg.norm(K1, 2))
    cert.normK2 = float(np.linalg.norm(K2, 2))
    cert.eta1, cert.eta2 = (float(v) for v in etas(cert.normK1, cert.normK2, normA, cert.eps_a))
    cert.first_order_flags = first_order_summary(
        pair.eps1, pair.eps2, pair.normP, pair.normQ, split.sigma1, split.sigma_r, split.delta,
        cert.normK1, cert.normK2, normA, normB, normC, r, sys.m, sys.p,
    )
    nB1h, nB1t = np.linalg.norm(hat.B, 2), np.linalg.norm(tilde.B, 2)
    nC1h, nC1t = np.linalg.norm(hat.C, 2), np.linalg.norm(tilde.C, 2)
    try:
        _, _, cert.xi1, cert.xi2, cert.zeta1, cert.zeta2 = gramian_diff_bounds(
            cert.normK1, cert.normK2, normA, normB, normC, nB1h, nC1h,
            cert.eps_a, cert.eps_b, cert.eps_c, cert.eps_b2, cert.eps_c2, split.sigma1,
        )
    except EtaTooLarge as exc:
        cert.reason = str(exc)
        return cert
    cert.eps_d_inf, cert.eps_d_2_B, cert.eps_d_2_C, cert.eps_d_2 = transfer_diff_bounds(
        split.sigma1, cert.xi1, cert.xi2, cert.zeta1, cert.zeta2, r, sys.m, sys.p,
        normB, normC, nB1h, nB1t, nC1h, nC1t, cert.eps_b, cert.eps_c,
    )
    if h2_bt_measured is None:
        h2_bt_measured = h2_norm(expanded_error_system(sys, hat))
    cert.h2_bt_measured = float(h2_bt_measured)
    cert.final_inf, cert.final_h2 = final_bounds(split.sigma, r, cert.eps_d_inf, cert.eps_d_2, cert.h2_bt_measured)
    cert.applicable = True
    lead = cert.first_order_flags
    for key in ("eps_x", "eps_y", "eps_a", "xi1", "xi2", "zeta1", "zeta2", "eps_d_inf"):
        v = getattr(cert, key)
        if lead.get(key):
            lead[f"ratio_{key}"] = v / lead[key]
    if lead["eps_d_inf"] > 0:
        # local slope of the leading transfer bound in eps_app; 1/4 means quartic-root scaling
        bigger = first_order_summary(
            16 * pair.eps1, 16 * pair.eps2, pair.normP, pair.normQ, split.sigma1, split.sigma_r, split.delta,
            cert.normK1, cert.normK2, normA, normB, normC, r, sys.m, sys.p,
        )
        lead["eps_d_inf_slope"] = float(np.log(bigger["eps_d_inf"] / lead["eps_d_inf"]) / np.log(16))
    return cert
