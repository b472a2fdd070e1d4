import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from morcert.errors import ObliqueAngle, RankDeficient
from morcert.subspace import (
    SubspaceBasis,
    biorthogonal_completion,
    biorthogonalize,
    canonical_angles,
    orthonormalize,
    sin_theta_norm,
)

E = np.eye(4)


def test_identical_subspaces():
    np.testing.assert_allclose(canonical_angles(E[:, :2], E[:, :2]), [0, 0], atol=1e-15)
    assert sin_theta_norm(E[:, :2], E[:, :2]) == pytest.approx(0, abs=1e-15)


def test_orthogonal_lines():
    e = np.eye(2)
    assert canonical_angles(e[:, :1], e[:, 1:])[0] == pytest.approx(np.pi / 2)
    assert sin_theta_norm(e[:, :1], e[:, 1:]) == pytest.approx(1.0)


def test_quarter_angle():
    u = np.array([[1.0], [0.0]])
    w = np.array([[1.0], [1.0]]) / np.sqrt(2)
    assert canonical_angles(u, w)[0] == pytest.approx(np.pi / 4, rel=1e-14)
    assert sin_theta_norm(u, w) == pytest.approx(0.7071067811865476, rel=1e-14)


def test_tiny_angle_is_accurate():
    t = 1e-10
    u = np.array([[1.0], [0.0]])
    w = np.array([[np.cos(t)], [np.sin(t)]])
    assert canonical_angles(u, w)[0] == pytest.approx(t, rel=1e-6)


def test_rank_deficient_basis_rejected():
    with pytest.raises(RankDeficient):
        SubspaceBasis(np.array([[1.0, 2.0], [1.0, 2.0]]))
    with pytest.raises(RankDeficient):
        orthonormalize(np.ones((3, 4)))


def test_biorthogonalize_examples():
    Q = orthonormalize(np.random.default_rng(1).standard_normal((5, 2)))
    np.testing.assert_allclose(biorthogonalize(Q, Q), Q, atol=1e-14)
    Y = biorthogonalize(np.array([[1.0], [0.0]]), np.array([[2.0], [2.0]]))
    np.testing.assert_allclose(Y, [[1.0], [1.0]])
    with pytest.raises(ObliqueAngle):
        biorthogonalize(np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]]))


def test_completion_examples():
    e1 = np.array([[1.0], [0.0]])
    X2, Y2 = biorthogonal_completion(e1, e1)
    assert abs(X2[1, 0]) == pytest.approx(1.0) and abs(X2[0, 0]) < 1e-15
    assert abs(Y2[1, 0]) == pytest.approx(1.0)
    X2, Y2 = biorthogonal_completion(np.eye(3), np.eye(3))
    assert X2.shape == (3, 0) and Y2.shape == (3, 0)


def test_completion_random_acute_pair():
    rng = np.random.default_rng(6)
    X1 = rng.standard_normal((6, 2))
    Y1 = biorthogonalize(X1, X1 + 0.2 * rng.standard_normal((6, 2)))
    X2, Y2 = biorthogonal_completion(X1, Y1)
    M = np.hstack([Y1, Y2]).T @ np.hstack([X1, X2])
    assert np.linalg.norm(M - np.eye(6), 2) <= 1e-8


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 9), data=st.data())
def test_angle_properties(seed, n, data):
    r = data.draw(st.integers(1, n - 1))
    rng = np.random.default_rng(seed)
    U, W = rng.standard_normal((n, r)), rng.standard_normal((n, r))
    th = canonical_angles(U, W)
    assert np.all(np.diff(th) >= -1e-15)
    assert th.min() >= 0 and th.max() <= np.pi / 2
    # symmetric, and invariant under a change of basis
    np.testing.assert_allclose(canonical_angles(W, U), th, atol=1e-10)
    M = rng.standard_normal((r, r)) + 3 * np.eye(r)
    np.testing.assert_allclose(canonical_angles(U @ M, W), th, atol=1e-8)
    # sin theta equals the distance of orthogonal projectors
    Qu, Qw = orthonormalize(U), orthonormalize(W)
    dist = np.linalg.norm(Qu @ Qu.T - Qw @ Qw.T, 2)
    assert sin_theta_norm(U, W) == pytest.approx(dist, abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 8), data=st.data())
def test_biorthogonal_pair_properties(seed, n, data):
    r = data.draw(st.integers(1, n))
    rng = np.random.default_rng(seed)
    X1 = rng.standard_normal((n, r))
    Y1 = biorthogonalize(X1, X1 + 0.3 * rng.standard_normal((n, r)))
    np.testing.assert_allclose(Y1.T @ X1, np.eye(r), atol=1e-9)
    X2, Y2 = biorthogonal_completion(X1, Y1)
    M = np.hstack([Y1, Y2]).T @ np.hstack([X1, X2])
    assert np.linalg.norm(M - np.eye(n), 2) <= 1e-8
