import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from morcert import ErrorCertificate, build_analysis, certify, gramians, lowrank_truncate
from morcert.certificate import (
    coeff_bounds,
    epsilon_G,
    etas,
    final_bounds,
    first_order_summary,
    gramian_diff_bounds,
    projector_bounds,
    reduced_norm_bounds,
    transfer_diff_bounds,
)
from morcert.errors import EtaTooLarge, HypothesisViolated
from morcert.harness import HarnessConfig, gen_system
from morcert.lyapunov import OBSERVABILITY

pos = st.floats(1e-6, 10.0)


def test_epsilon_examples():
    assert epsilon_G(0, 0, 3.0, 5.0) == 0
    assert epsilon_G(0.01, 0.04, 1.0, 4.0) == pytest.approx(0.22, rel=1e-14)
    e, g = 1e-3, 7.0
    assert epsilon_G(e, e, g, g) == pytest.approx(np.sqrt(g * e) + e, rel=1e-14)
    with pytest.raises(ValueError):
        epsilon_G(-1e-3, 0, 1, 1)


def test_projector_examples():
    assert projector_bounds(0, 0.5, 1, 1, 2, 1, 1, 0, 0) == (0.0, 0.0)
    eps_x, _ = projector_bounds(0.01, 0.5, 1.0, 0.99, 2.0, 1.0, 1.0, 1e-4, 1e-4)
    assert eps_x == pytest.approx(0.05, rel=1e-14)
    with pytest.raises(HypothesisViolated):
        projector_bounds(0.01, 0.0, 1, 1, 1, 1, 1, 0, 0)


def test_coeff_examples():
    assert coeff_bounds(0, 0, 1, 1, 0.5, 0.5) == (0.0,) * 5
    a, b, c, b2, c2 = coeff_bounds(0.1, 0.1, 1.0, 1.0, 0.5, 0.5)
    assert (a, b, c) == pytest.approx((0.3, 0.1, 0.1))
    assert b2 == pytest.approx(0.4) and c2 == pytest.approx(0.2)


def test_gramian_diff_examples():
    out = gramian_diff_bounds(0.5, 0.5, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 1.0)
    assert out[2:] == (0.0,) * 4
    # ||K1|| = 0.5, ||A|| = 1, eps_a = 0.01 give eta1 = 0.005
    eta1, _, xi1, *_ = gramian_diff_bounds(0.5, 0.5, 1, 1, 1, 1, 1, 0.01, 0.02, 0.02, 0.04, 0.04, 1.0)
    assert eta1 == pytest.approx(0.005)
    assert xi1 == pytest.approx(0.5 / (1 - 0.005) * (0.02 + 0.01), rel=1e-14)
    with pytest.raises(EtaTooLarge) as exc:
        gramian_diff_bounds(10, 0.1, 1, 1, 1, 1, 1, 0.06, 0, 0, 0, 0, 1.0)
    assert exc.value.index == 1


def test_zeta_carries_sigma1_squared():
    base = gramian_diff_bounds(0.5, 0.5, 1, 1, 1, 1, 1, 0.01, 0, 0, 0, 0, 1.0)
    big = gramian_diff_bounds(0.5, 0.5, 1, 1, 1, 1, 1, 0.01, 0, 0, 0, 0, 3.0)
    assert big[4] == pytest.approx(9 * base[4]) and big[5] == pytest.approx(9 * base[5])
    assert big[2] == base[2]


def test_transfer_examples():
    zero = transfer_diff_bounds(1.0, 0, 0, 0, 0, 2, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0)
    assert zero == (0.0,) * 4
    d_inf, *_ = transfer_diff_bounds(1.0, 0.01, 0.01, 0.01, 0.02, 2, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0)
    assert d_inf == pytest.approx(np.sqrt(0.04 + 0.06 + 0.0006), rel=1e-14)
    assert d_inf == pytest.approx(0.31718, abs=1e-5)


def test_transfer_h2_output_side_uses_p():
    # the output-side bound scales with sqrt(min(r, p)), not with m
    args = dict(sigma1=1.0, xi1=0.01, xi2=0.01, zeta1=0.01, zeta2=0.01, r=3, normB=1, normC=1,
                normB1hat=1, normB1t=1, normC1hat=1, normC1t=1, eps_b=0.1, eps_c=0.1)
    _, _, c1, _ = transfer_diff_bounds(m=3, p=1, **args)
    _, _, c3, _ = transfer_diff_bounds(m=1, p=3, **args)
    assert c3 == pytest.approx(np.sqrt(3) * c1)


def test_final_bounds():
    sigma = np.array([1.0, 0.1, 0.01])
    assert final_bounds(sigma, 1, 0.0, 0.0, 0.05) == pytest.approx((0.22, 0.05))
    assert final_bounds(sigma, 3, 0.3, 0.2, 0.0) == pytest.approx((0.3, 0.2))


def test_reduced_norm_examples():
    b = reduced_norm_bounds(1, 1, 1, 0.5, 0.5, 0.5, 0, 0, 0)
    assert b["A11_hat"] == pytest.approx(1.0)
    for k in ("A11", "B1", "C1"):
        assert b[f"{k}_tilde"] == b[f"{k}_hat"]


def test_first_order_examples():
    lead = first_order_summary(0, 0, 1, 1, 1, 0.5, 0.5, 1, 1, 1, 1, 1, 1, 1, 1)
    assert all(v == 0 for k, v in lead.items() if k != "rho")
    lead = first_order_summary(1e-4, 1e-4, 1, 1, 1, 0.5, 0.5, 1, 1, 1, 1, 1, 1, 1, 1)
    assert lead["eps_x"] == pytest.approx(0.05, rel=1e-14)


def test_first_order_transfer_scaling():
    a = first_order_summary(1e-8, 1e-8, 2, 3, 1, 0.5, 0.4, 2, 3, 4, 1, 1, 2, 1, 1)
    b = first_order_summary(1e-12, 1e-12, 2, 3, 1, 0.5, 0.4, 2, 3, 4, 1, 1, 2, 1, 1)
    assert np.log10(a["eps_d_inf"] / b["eps_d_inf"]) == pytest.approx(1.0, rel=1e-12)
    assert np.log10(a["eps_x"] / b["eps_x"]) == pytest.approx(2.0, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(e1=pos, e2=pos, P=pos, Q=pos, t=st.floats(1.0, 5.0))
def test_epsilon_monotone(e1, e2, P, Q, t):
    base = epsilon_G(e1, e2, P, Q)
    assert epsilon_G(t * e1, e2, P, Q) >= base
    assert epsilon_G(e1, t * e2, P, Q) >= base
    assert epsilon_G(e1, e2, t * P, t * Q) >= base


@settings(max_examples=100, deadline=None)
@given(eps=st.floats(1e-8, 1e-2), du=st.floats(0.05, 1.0), sr=st.floats(0.1, 1.0), s1=st.floats(1.0, 5.0),
       P=pos, Q=pos, e1=st.floats(0, 1e-3), e2=st.floats(0, 1e-3), t=st.floats(1.0, 4.0))
def test_cascade_monotone_in_eps(eps, du, sr, s1, P, Q, e1, e2, t):
    x0, y0 = projector_bounds(eps, du, sr, sr - eps, s1, P, Q, e1, e2)
    x1, y1 = projector_bounds(t * eps, du, sr, sr - t * eps, s1, P, Q, e1, e2)
    assert x1 >= x0 and y1 >= y0
    c0 = coeff_bounds(x0, y0, P, Q, sr, sr - eps)
    c1 = coeff_bounds(x1, y1, P, Q, sr, sr - t * eps)
    assert all(b >= a for a, b in zip(c0, c1))
    # a smaller effective gap only loosens the bounds
    x2, y2 = projector_bounds(eps, du / t, sr, sr - eps, s1, P, Q, e1, e2)
    assert x2 >= x0 and y2 >= y0


@settings(max_examples=100, deadline=None)
@given(k1=st.floats(0.01, 2), k2=st.floats(0.01, 2), ea=st.floats(0, 0.01), eb=st.floats(0, 0.1),
       s1=st.floats(0.1, 3), t=st.floats(1.0, 3.0))
def test_gramian_and_transfer_monotone(k1, k2, ea, eb, s1, t):
    args = (1, 1, 1, 1, 1)
    try:
        g1 = gramian_diff_bounds(k1, k2, *args, t * ea, t * eb, t * eb, t * eb, t * eb, s1)
    except EtaTooLarge:
        return
    g0 = gramian_diff_bounds(k1, k2, *args, ea, eb, eb, eb, eb, s1)
    assert all(b >= a for a, b in zip(g0, g1))
    d0 = transfer_diff_bounds(s1, *g0[2:], 2, 1, 1, 1, 1, 1, 1, 1, 1, eb, eb)
    d1 = transfer_diff_bounds(s1, *g1[2:], 2, 1, 1, 1, 1, 1, 1, 1, 1, t * eb, t * eb)
    assert all(b >= a for a, b in zip(d0, d1))


def test_etas_linear():
    assert etas(2.0, 3.0, 0.5, 0.1) == pytest.approx((0.1, 0.15))


def _instance(seed=3, n=30, r=1, k=9):
    cfg = HarnessConfig(n=n, m=1, p=1, r=r, seed=seed, trunc_ranks=())
    sys = gen_system(cfg)
    g = gramians(sys)
    Sf = lowrank_truncate(g.P, rank=k)
    Rf = lowrank_truncate(g.Q, rank=k, side=OBSERVABILITY)
    return certify(build_analysis(sys, g, Sf, Rf, r))


def test_certify_harness_instance():
    cert = _instance()
    assert cert.applicable and cert.reason == ""
    assert cert.eta1 < 0.5 and cert.eta2 < 0.5
    assert 0 < cert.eps_d_inf < cert.final_inf
    assert cert.eps_d_2 == min(cert.eps_d_2_B, cert.eps_d_2_C)
    assert cert.first_order_flags["eps_d_inf_slope"] == pytest.approx(0.25, abs=1e-6)
    back = ErrorCertificate.from_dict(cert.to_dict())
    assert back == cert


def test_exact_cascade_below_leading_order():
    cert = _instance(k=9)
    assert cert.eps_app <= 1e-10
    for key, v in cert.first_order_flags.items():
        if key.startswith("ratio_"):
            assert v <= 1 + 1e-6, key


def test_inapplicable_certificate_keeps_upstream_values():
    cert = _instance(r=3, k=12)
    assert not cert.applicable
    assert cert.eps is not None and cert.eps_x is not None
    assert cert.final_inf is None
