import numpy as np
import pytest
import scipy.linalg as sla

from rfol.core import ConditioningError, ParameterError
from rfol.features import assemble, sample_cauchy
from rfol.solver import (
    JITTER_LADDER,
    gram_factorize,
    gram_matrix,
    gram_spectrum_bounds,
    min_norm_fit,
    min_norm_fit_multi,
    min_norm_solve,
)


def random_features(m, N, seed, gamma=30.0):
    x = np.sort(np.random.default_rng(seed).uniform(size=m))
    return assemble(sample_cauchy(1, N, gamma, seed), x)


def unitary_rows(m, N):
    # rows of the N-point DFT matrix are orthogonal with squared norm N
    k = np.arange(N)
    return np.exp(2j * np.pi * np.outer(np.arange(m), k) / N)


def test_factor_of_scaled_identity():
    A = unitary_rows(4, 16)
    f = gram_factorize(A)
    assert f.jitter_used == 0.0
    np.testing.assert_allclose(f.factor, 4.0 * np.eye(4), atol=1e-12)


def test_single_row_gram():
    A = random_features(1, 37, 0)
    f = gram_factorize(A)
    assert f.factor.shape == (1, 1)
    assert f.factor[0, 0].real == pytest.approx(np.sqrt(37), rel=1e-14)


def test_factor_reproduces_gram():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(4, 16)) + 1j * rng.normal(size=(4, 16))
    f = gram_factorize(A)
    L = f.factor
    np.testing.assert_allclose(L @ L.conj().T, A @ A.conj().T, atol=1e-10)
    assert np.allclose(L, np.tril(L))


def test_jitter_ladder_escalates_then_reports():
    A = random_features(3, 10, 2)
    A_dup = np.vstack([A, A[0]])  # duplicate row: singular Gram
    f = gram_factorize(A_dup)
    assert f.jitter_used in [10 * t for t in JITTER_LADDER[1:]]
    indefinite = np.diag([1.0, -1.0]).astype(complex)
    with pytest.raises(ConditioningError, match=r"smallest eigenvalue estimate -1\.0"):
        gram_factorize(np.ones((2, 5), dtype=complex), gram=indefinite)


def test_underparametrized_rejected():
    with pytest.raises(ParameterError):
        gram_factorize(np.ones((5, 3)))


def test_identity_system():
    y = np.array([1.0, -2.0, 3.5])
    np.testing.assert_allclose(min_norm_fit(np.eye(3), y), y, atol=1e-15)


def test_zero_rhs():
    A = random_features(5, 40, 3)
    assert np.all(min_norm_fit(A, np.zeros(5)) == 0)


def test_matches_svd_pinv():
    rng = np.random.default_rng(4)
    A = rng.normal(size=(3, 8)) + 1j * rng.normal(size=(3, 8))
    y = rng.normal(size=3)
    U, s, Vh = np.linalg.svd(A, full_matrices=False)
    oracle = Vh.conj().T @ ((U.conj().T @ y) / s)
    np.testing.assert_allclose(min_norm_fit(A, y), oracle, atol=1e-8)


def test_multi_duplicate_columns():
    A = random_features(6, 30, 5)
    y = np.random.default_rng(5).normal(size=6)
    C = min_norm_fit_multi(A, np.column_stack([y, y]))
    np.testing.assert_array_equal(C[:, 0], C[:, 1])


def test_multi_identity_is_pinv():
    A = random_features(6, 30, 6)
    C = min_norm_fit_multi(A, np.eye(6))
    np.testing.assert_allclose(A @ C, np.eye(6), atol=1e-8)
    np.testing.assert_allclose(C, np.linalg.pinv(A), atol=1e-8)


def test_multi_matches_per_column():
    rng = np.random.default_rng(7)
    A = random_features(6, 20, 7)
    Y = rng.normal(size=(6, 4))
    C = min_norm_fit_multi(A, Y)
    for j in range(4):
        np.testing.assert_allclose(C[:, j], min_norm_fit(A, Y[:, j]), atol=1e-12)


def test_multi_threads_agree():
    rng = np.random.default_rng(8)
    A = random_features(10, 60, 8)
    Y = rng.normal(size=(10, 40))
    np.testing.assert_allclose(min_norm_fit_multi(A, Y, workers=4), min_norm_fit_multi(A, Y), atol=1e-12)


def test_spectrum_single_row():
    lo, hi = gram_spectrum_bounds(random_features(1, 50, 9))
    assert lo == hi == pytest.approx(1.0, abs=1e-15)


def test_spectrum_scaled_identity():
    lo, hi = gram_spectrum_bounds(unitary_rows(5, 20))
    assert lo == pytest.approx(1.0, abs=1e-12) and hi == pytest.approx(1.0, abs=1e-12)


def test_spectrum_matches_eigendecomposition():
    A = random_features(5, 40, 10, gamma=3.0)
    ev = np.linalg.eigvals(A @ A.conj().T / 40).real
    lo, hi = gram_spectrum_bounds(A)
    assert lo == pytest.approx(ev.min(), abs=1e-8) and hi == pytest.approx(ev.max(), abs=1e-8)


def test_pseudo_inverse_identities():
    A = random_features(8, 50, 11)
    P = min_norm_fit_multi(A, np.eye(8))
    assert np.linalg.norm(A @ P @ A - A) <= 1e-8 * np.linalg.norm(A)
    assert np.linalg.norm(P @ A @ P - P) <= 1e-8 * np.linalg.norm(P)


def test_norm_bounds_follow_spectrum():
    A = random_features(10, 400, 12, gamma=60.0)
    N = A.shape[1]
    lo, hi = gram_spectrum_bounds(A)
    eta = max(1 - lo, hi - 1) / 2
    P = min_norm_fit_multi(A, np.eye(10))
    assert np.linalg.norm(P, 2) ** 2 <= 1 / (N * (1 - 2 * eta)) * (1 + 1e-10)
    assert np.linalg.norm(A, 2) ** 2 <= N * (1 + 2 * eta) * (1 + 1e-10)


def test_ill_conditioned_falls_back_to_qr():
    # nearly coincident points at a small scale: the Gram route needs jitter
    x = np.array([0.0, 0.2, 0.4, 0.6, 0.8])
    A = assemble(sample_cauchy(1, 2000, 0.05, 1), x)
    y = np.sin(3 * x)
    sol = min_norm_solve(A, y)
    assert sol.residual <= 1e-8
    assert sol.method in ("gram", "qr")
    if sol.method == "qr":
        assert sol.jitter_used == 0.0
    U, s, Vh = sla.svd(A, full_matrices=False)
    oracle = Vh.conj().T @ ((U.conj().T @ y) / s)
    assert np.linalg.norm(sol.coefficients) <= np.linalg.norm(oracle) * (1 + 1e-6)


def test_rank_deficient_raises():
    A = np.ones((3, 6), dtype=complex)
    with pytest.raises(ConditioningError):
        min_norm_fit(A, np.array([1.0, 2.0, 3.0]))
