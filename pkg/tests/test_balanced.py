import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from morcert import LtiSystem, balancing_transform, bt_reduce, eval_transfer, gramians, hankel_svd
from morcert.balanced import (
    CLASSICAL,
    VARIANT,
    HankelSpectrum,
    bt_projectors_classical,
    bt_projectors_variant,
    gramian_factors,
)
from morcert.errors import DegenerateGap, RankCollapse
from morcert.lti import expanded_error_system
from morcert.norms import FrequencyGrid, hinf_estimate

from conftest import random_stable

H = np.sqrt(0.5)


def _brute_hankel(P, Q):
    return np.sort(np.sqrt(np.abs(np.linalg.eigvals(P @ Q))))[::-1]


def test_scalar_hankel_value():
    _, sigma, _, _ = hankel_svd(np.array([[H]]), np.array([[H]]))
    assert sigma[0] == pytest.approx(0.5, rel=1e-15)


def test_identity_factors():
    U, sigma, V, _ = hankel_svd(np.eye(2), np.eye(2))
    np.testing.assert_allclose(sigma, [1, 1])
    np.testing.assert_allclose(np.abs(U), np.eye(2), atol=1e-15)


def test_diag_hankel_values(diag_sys):
    g = gramians(diag_sys)
    S, R = gramian_factors(g.P, g.Q, "cholesky")
    _, sigma, _, _ = hankel_svd(S, R)
    np.testing.assert_allclose(sigma, _brute_hankel(g.P, g.Q), rtol=1e-12)
    # P = Q, so the Hankel values are the eigenvalues of P
    # eigenvalues of [[1/2, 1/3], [1/3, 1/4]]: (3/4 +- sqrt(9/16 - 1/18)) / 2
    root = np.sqrt(9 / 16 - 1 / 18)
    np.testing.assert_allclose(sigma, [(0.75 + root) / 2, (0.75 - root) / 2], rtol=1e-12)


def test_scalar_projectors():
    S = R = np.array([[H]])
    U, sigma, V, S = hankel_svd(S, R)
    X1, Y1 = bt_projectors_variant(S, R, U, sigma, V, 1)
    assert abs(X1[0, 0]) == pytest.approx(H) and abs(Y1[0, 0]) == pytest.approx(np.sqrt(2))
    assert (Y1.T @ X1)[0, 0] == pytest.approx(1.0)
    X1, Y1 = bt_projectors_classical(S, R, U, sigma, V, 1)
    assert abs(X1[0, 0]) == pytest.approx(1.0) and abs(Y1[0, 0]) == pytest.approx(1.0)


def test_scalar_reduction_is_itself(scalar_sys):
    red = bt_reduce(scalar_sys, 1).reduced
    assert red.A[0, 0] == pytest.approx(-1.0)
    assert red.B[0, 0] * red.C[0, 0] == pytest.approx(1.0)


def test_tie_and_collapse():
    S = R = np.eye(3)
    U, sigma, V, S = hankel_svd(S, R)
    with pytest.raises(DegenerateGap):
        bt_projectors_variant(S, R, U, sigma, V, 1)
    S = np.diag([1.0, 0.0])
    U, sigma, V, S = hankel_svd(S, S)
    with pytest.raises(RankCollapse):
        bt_projectors_classical(S, S, U, sigma, V, 2)


def test_order_zero_rejected(scalar_sys):
    with pytest.raises(ValueError):
        bt_reduce(scalar_sys, 0)


def test_full_order_keeps_transfer(rng):
    sys = random_stable(rng, 6, 2, 2)
    bt = bt_reduce(sys, 6)
    assert bt.bounds == (0.0, 0.0)
    for om in rng.uniform(0.01, 100, 10):
        np.testing.assert_allclose(eval_transfer(bt.reduced, 1j * om), eval_transfer(sys, 1j * om), rtol=1e-8, atol=1e-12)
    assert hinf_estimate(expanded_error_system(sys, bt.reduced))[0] <= 1e-8


def test_constructions_agree(rng):
    sys = random_stable(rng, 8, 2, 1)
    a = bt_reduce(sys, 3, construction=CLASSICAL).reduced
    b = bt_reduce(sys, 3, construction=VARIANT).reduced
    for om in rng.uniform(0.01, 100, 10):
        np.testing.assert_allclose(eval_transfer(a, 1j * om), eval_transfer(b, 1j * om), rtol=1e-8)


def test_balancing_scalar():
    S = R = np.array([[H]])
    U, sigma, V, S = hankel_svd(S, R)
    P = np.array([[0.5]])
    # variant: T = Sigma^{-1} V^T R^T = sqrt(2), and T P T^T = 1, T^{-T} Q T^{-1} = sigma^2
    T, Ti = balancing_transform(S, R, U, sigma, V, VARIANT)
    assert abs(T[0, 0]) == pytest.approx(np.sqrt(2)) and abs(Ti[0, 0]) == pytest.approx(H)
    assert (T @ P @ T.T)[0, 0] == pytest.approx(1.0)
    assert (Ti.T @ P @ Ti)[0, 0] == pytest.approx(0.25)
    # classical square root: the scalar system is already balanced
    T, Ti = balancing_transform(S, R, U, sigma, V, CLASSICAL)
    assert abs(T[0, 0]) == pytest.approx(1.0)
    assert (T @ P @ T.T)[0, 0] == pytest.approx(0.5)


def test_balancing_already_balanced():
    P = Q = np.diag([3.0, 1.0, 0.2])
    S, R = gramian_factors(P, Q)
    U, sigma, V, S = hankel_svd(S, R)
    T, Ti = balancing_transform(S, R, U, sigma, V)
    np.testing.assert_allclose(np.abs(T), np.eye(3), atol=1e-12)
    np.testing.assert_allclose(T @ P @ T.T, P, atol=1e-12)


@pytest.mark.parametrize("construction", [CLASSICAL, VARIANT])
def test_balancing_diag_example(diag_sys, construction):
    g = gramians(diag_sys)
    S, R = gramian_factors(g.P, g.Q)
    U, sigma, V, S = hankel_svd(S, R)
    T, Ti = balancing_transform(S, R, U, sigma, V, construction)
    Pb, Qb = T @ g.P @ T.T, Ti.T @ g.Q @ Ti
    np.testing.assert_allclose(T @ Ti, np.eye(2), atol=1e-12)
    assert abs(Pb[0, 1]) <= 1e-8 and abs(Qb[0, 1]) <= 1e-8
    if construction == CLASSICAL:
        np.testing.assert_allclose(np.diag(Pb), sigma, rtol=1e-8)
    else:
        np.testing.assert_allclose(np.diag(Qb), sigma**2, rtol=1e-8)


def test_diag_example_interval(diag_sys):
    bt = bt_reduce(diag_sys, 1)
    s2 = bt.spectrum.value(2)
    assert bt.bounds == pytest.approx((s2, 2 * s2))
    # brute-force sweep oracle on the error system
    w = np.concatenate([[0.0], np.logspace(-4, 4, 20001)])
    err = expanded_error_system(diag_sys, bt.reduced)
    g = max(np.linalg.norm(eval_transfer(err, 1j * om), 2) for om in w[::20])
    est, _ = hinf_estimate(err)
    assert est >= g * (1 - 1e-12)
    assert s2 * (1 - 1e-3) <= est <= 2 * s2 * (1 + 1e-3)


def test_spectrum_helpers():
    sp = HankelSpectrum.from_values([0.1, 1.0, 0.0])
    np.testing.assert_array_equal(sp.sigma, [1.0, 0.1, 0.0])
    assert sp.r_max == 2 and sp.tail_sum(1) == pytest.approx(0.1) and sp.value(4) == 0.0


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(3, 10), data=st.data())
def test_hankel_values_are_invariants(seed, n, data):
    r = data.draw(st.integers(1, n - 1))
    rng = np.random.default_rng(seed)
    sys = random_stable(rng, n, 2, 2)
    g = gramians(sys)
    sigma = bt_reduce(sys, r, gap_tol=0.0).spectrum.sigma
    ref = _brute_hankel(g.P, g.Q)
    np.testing.assert_allclose(sigma[:3], ref[:3], rtol=1e-6)
    T = np.eye(n) + 0.5 * rng.standard_normal((n, n)) / np.sqrt(n)
    sigma_t = bt_reduce(sys.transformed(T), r, gap_tol=0.0).spectrum.sigma
    np.testing.assert_allclose(sigma_t[:3], sigma[:3], rtol=1e-6)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(3, 9), data=st.data())
def test_reduced_model_is_stable_and_balanced(seed, n, data):
    r = data.draw(st.integers(1, n - 1))
    rng = np.random.default_rng(seed)
    sys = random_stable(rng, n, 1, 1)
    try:
        bt = bt_reduce(sys, r)
    except (DegenerateGap, RankCollapse):
        return
    if bt.spectrum.value(r) < 1e-8 * bt.spectrum.value(1):
        return
    assert np.max(np.linalg.eigvals(bt.reduced.A).real) < 0
    gr = gramians(bt.reduced)
    s = bt.spectrum.sigma[:r]
    np.testing.assert_allclose(gr.P, np.diag(s), atol=1e-6 * s[0])
    np.testing.assert_allclose(gr.Q, np.diag(s), atol=1e-6 * s[0])
