import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import spectral_radius_poly
from swistab import matcore
from swistab.errors import DimensionMismatch, NonFinite, NonSquare, NotPositiveDefinite, NotPSD, NotSymmetric
from swistab.matcore import DEFAULT_TOL, Tolerance

from helpers import GOLDEN_ALPHA, random_spd

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)
square3 = arrays(np.float64, (3, 3), elements=finite)


@pytest.mark.parametrize("A, expected", [
    (np.eye(2), 1.0),
    (0.5 * np.array([[1, 0], [1.5, -1]]), 0.5),
    (np.array([[0, -1], [1, 0]]), 1.0),
    (np.zeros((3, 3)), 0.0),
])
def test_spectral_radius_examples(A, expected):
    assert matcore.spectral_radius(A) == pytest.approx(expected, abs=1e-12)


def test_spectral_radius_triangular():
    rng = np.random.default_rng(3)
    A = np.triu(rng.standard_normal((3, 3)))
    assert matcore.spectral_radius(A) == pytest.approx(np.abs(np.diag(A)).max(), rel=1e-12)


def test_spectral_radius_matches_polynomial_oracle():
    rng = np.random.default_rng(11)
    for _ in range(20):
        A = rng.standard_normal((3, 3))
        assert matcore.spectral_radius(A) == pytest.approx(spectral_radius_poly(A), rel=1e-9)


def test_spectral_radii_batched():
    rng = np.random.default_rng(1)
    stack = rng.standard_normal((50, 3, 3))
    np.testing.assert_allclose(matcore.spectral_radii(stack), [matcore.spectral_radius(A) for A in stack])


@pytest.mark.parametrize("bad, err", [
    (np.ones((2, 3)), NonSquare),
    (np.array([[1.0, np.nan], [0, 1]]), NonFinite),
    (np.array([[np.inf, 0], [0, 1]]), NonFinite),
])
def test_input_validation(bad, err):
    with pytest.raises(err):
        matcore.spectral_radius(bad)


def test_tolerance_validation_and_update():
    with pytest.raises(ValueError):
        Tolerance(eig_tol=0)
    t = DEFAULT_TOL.updated(rank_tol=1e-6, eig_tol=None)
    assert t.rank_tol == 1e-6 and t.eig_tol == DEFAULT_TOL.eig_tol
    assert set(t.as_dict()) == {"eig_tol", "rank_tol", "psd_tol", "conv_tol", "decision_band", "sym_tol"}


@pytest.mark.parametrize("P, R", [
    (np.eye(3), np.eye(3)),
    (np.diag([4.0, 1.0]), np.diag([2.0, 1.0])),
])
def test_p_factor_examples(P, R):
    np.testing.assert_allclose(matcore.p_factor(P), R, atol=1e-15)


def test_p_factor_reassembles():
    rng = np.random.default_rng(5)
    for d in (2, 3, 5):
        P = random_spd(rng, d)
        R = matcore.p_factor(P)
        w, V = np.linalg.eigh(P)
        oracle = V @ np.diag(w) @ V.T
        assert np.linalg.norm(R.T @ R - oracle) <= 1e-12 * np.linalg.norm(P)


@pytest.mark.parametrize("P", [np.diag([1.0, 0.0]), np.diag([1.0, -1.0]), np.diag([1.0, 1e-12])])
def test_p_factor_rejects_non_spd(P):
    with pytest.raises(NotPositiveDefinite) as exc:
        matcore.p_factor(P)
    assert exc.value.min_eig == pytest.approx(np.linalg.eigvalsh(P)[0])


def test_asymmetric_p_rejected():
    with pytest.raises(NotSymmetric):
        matcore.p_factor(np.array([[1.0, 0.5], [0.0, 1.0]]))


@pytest.mark.parametrize("P, x, expected", [
    (np.eye(2), [3, 4], 5.0),
    (np.diag([4.0, 1.0]), [1, 0], 2.0),
    (np.diag([4.0, 1.0]), [0, 0], 0.0),
])
def test_p_norm_vec_examples(P, x, expected):
    assert matcore.p_norm_vec(P, x) == pytest.approx(expected)


def test_p_norm_vec_matches_factor():
    rng = np.random.default_rng(2)
    P = random_spd(rng, 3)
    x = rng.standard_normal(3)
    assert matcore.p_norm_vec(P, x) == pytest.approx(np.sqrt(x @ P @ x), rel=1e-13)
    with pytest.raises(DimensionMismatch):
        matcore.p_norm_vec(P, x[:2])


def test_p_opnorm_examples():
    S2 = GOLDEN_ALPHA * np.array([[1.0, 1.0], [0.0, 1.0]])
    assert matcore.p_opnorm(np.eye(2), S2) == pytest.approx(1.0, abs=1e-12)
    assert matcore.p_opnorm(np.eye(2), np.zeros((2, 2))) == 0.0
    with pytest.raises(DimensionMismatch):
        matcore.p_opnorm(np.eye(3), S2)


def test_p_opnorm_sampling_oracle():
    rng = np.random.default_rng(8)
    P = random_spd(rng, 3, cond=10)
    A = rng.standard_normal((3, 3))
    X = rng.standard_normal((3, 10_000))
    gains = np.sqrt(np.einsum("in,ij,jn->n", A @ X, P, A @ X) / np.einsum("in,ij,jn->n", X, P, X))
    norm = matcore.p_opnorm(P, A)
    assert gains.max() <= norm + 1e-12
    assert gains.max() >= 0.9 * norm


def test_p_conorm_examples():
    rng = np.random.default_rng(4)
    P = random_spd(rng, 3)
    assert matcore.p_conorm(P, np.diag([1.0, 2.0, 0.0])) == pytest.approx(0.0, abs=1e-12)
    assert matcore.p_conorm(P, 0.7 * np.eye(3)) == pytest.approx(0.7, rel=1e-12)
    A = rng.standard_normal((3, 3))
    assert matcore.p_conorm(P, A) == pytest.approx(1 / matcore.p_opnorm(P, np.linalg.inv(A)), rel=1e-9)


@pytest.mark.parametrize("S, dim, contains", [
    (np.diag([1.0, 0.0]), 1, [0, 1]),
    (np.zeros((3, 3)), 3, [1, 2, 3]),
    (np.eye(2), 0, None),
])
def test_kernel_examples(S, dim, contains):
    B = matcore.kernel(S)
    assert B.shape[1] == dim
    if contains is not None:
        v = np.asarray(contains, float)
        assert np.linalg.norm(v - B @ (B.T @ v)) < 1e-12


def test_kernel_of_rank_one_gram():
    rng = np.random.default_rng(6)
    G = rng.standard_normal((1, 3))
    S = G.T @ G
    B = matcore.kernel(S)
    assert B.shape == (3, 2)
    assert np.linalg.norm(S @ B) <= DEFAULT_TOL.rank_tol * np.linalg.norm(S, 2)
    np.testing.assert_allclose(B.T @ B, np.eye(2), atol=1e-12)


@pytest.mark.parametrize("S, T", [
    (np.diag([4.0, 9.0]), np.diag([2.0, 3.0])),
    (np.zeros((2, 2)), np.zeros((2, 2))),
])
def test_sqrt_psd_examples(S, T):
    np.testing.assert_allclose(matcore.sqrt_psd(S), T, atol=1e-15)


def test_sqrt_psd_reconstructs_and_clamps():
    rng = np.random.default_rng(9)
    B = rng.standard_normal((2, 4))
    S = B.T @ B
    T = matcore.sqrt_psd(S)
    assert np.linalg.norm(T @ T - S) <= 1e-12 * np.linalg.norm(S)
    assert np.linalg.eigvalsh(T)[0] >= -1e-12
    with pytest.raises(NotPSD):
        matcore.sqrt_psd(np.diag([1.0, -1e-3]))


# -- properties ---------------------------------------------------------


@settings(max_examples=200, deadline=None)
@given(square3, st.integers(0, 2**32 - 1))
def test_gelfand_bound(A, seed):
    P = random_spd(np.random.default_rng(seed), 3)
    norm = matcore.p_opnorm(P, A)
    assert matcore.spectral_radius(A) <= norm * (1 + 10 * DEFAULT_TOL.eig_tol) + 1e-300
    assert matcore.p_conorm(P, A) <= norm + 1e-12


@settings(max_examples=200, deadline=None)
@given(square3, square3, st.integers(0, 2**32 - 1))
def test_submultiplicative(A, B, seed):
    P = random_spd(np.random.default_rng(seed), 3, cond=5)
    lhs = matcore.p_opnorm(P, A @ B)
    rhs = matcore.p_opnorm(P, A) * matcore.p_opnorm(P, B)
    assert lhs <= rhs * (1 + 1e-12) + 10 * DEFAULT_TOL.eig_tol


@settings(max_examples=200, deadline=None)
@given(square3)
def test_identity_weight_is_spectral_norm(A):
    assert matcore.p_opnorm(np.eye(3), A) == pytest.approx(np.linalg.svd(A, compute_uv=False)[0], abs=1e-12)


# Defective matrices (Jordan blocks) move their eigenvalues by ~sqrt(eps) under
# any rounding, so the property is checked on generic Gaussian matrices.
@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_similarity_invariance(seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((3, 3))
    Q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    T = Q @ np.diag([1.0, 2.0, 3.0])
    B = T @ A @ np.linalg.inv(T)
    assert matcore.spectral_radius(B) == pytest.approx(matcore.spectral_radius(A), rel=1e-9)


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, (3, 2), elements=finite))
def test_kernel_vectors_are_annihilated(G):
    S = G @ G.T
    B = matcore.kernel(S)
    if np.linalg.norm(S) > 0:
        assert np.linalg.norm(S @ B) <= DEFAULT_TOL.rank_tol * np.linalg.norm(S, 2) * 1.01 + 1e-300
