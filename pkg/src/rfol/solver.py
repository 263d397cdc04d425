"""Min-norm interpolation c = A^* (A A^*)^{-1} y for wide feature matrices.

The fast path factors the Gram matrix A A^* with a Cholesky decomposition,
escalating a diagonal jitter ``N * t`` through ``JITTER_LADDER`` when the plain
factorization fails. Forming A A^* squares the condition number of A, so once
jitter is needed (or the solution misses the interpolation residual bound) the
fit is recomputed from a thin QR factorization of A^*, which gives the same
min-norm solution at the conditioning of A itself.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .core import ConditioningError, DataError, ParameterError

JITTER_LADDER = (0.0, 1e-14, 1e-12, 1e-10, 1e-8)
RESIDUAL_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class GramFactorization:
    factor: np.ndarray  # lower-triangular L with L L^* = A A^* + jitter I
    jitter_used: float
    scale_hint: int

    @property
    def size(self) -> int:
        return self.factor.shape[0]

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return sla.cho_solve((self.factor, True), rhs, check_finite=False)


def gram_matrix(A: np.ndarray) -> np.ndarray:
    G = A @ A.conj().T
    # exact Hermitian symmetry for the factorization
    return 0.5 * (G + G.conj().T)


def _check_matrix(A) -> np.ndarray:
    A = np.asarray(A)
    if A.ndim != 2:
        raise DataError(f"feature matrix must be 2-D, got shape {A.shape}")
    if A.shape[0] > A.shape[1]:
        raise ParameterError(
            f"min-norm interpolation needs at least as many features as rows (N={A.shape[1]} < m={A.shape[0]})"
        )
    return A.astype(np.complex128, copy=False)


def gram_factorize(A, *, gram: Optional[np.ndarray] = None) -> GramFactorization:
    """Cholesky factor of A A^*, escalating jitter along the ladder until it succeeds."""
    A = _check_matrix(A)
    G = gram_matrix(A) if gram is None else gram
    N = A.shape[1]
    eye = np.eye(G.shape[0])
    for t in JITTER_LADDER:
        jitter = N * t
        try:
            L = np.linalg.cholesky(G + jitter * eye if jitter else G)
        except np.linalg.LinAlgError:
            continue
        if np.all(np.isfinite(L)):
            return GramFactorization(L, jitter, N)
    lam = float(np.linalg.eigvalsh(G)[0])
    raise ConditioningError(
        f"Gram matrix not factorizable with jitter up to {N * JITTER_LADDER[-1]:.3g}; "
        f"smallest eigenvalue estimate {lam:.3e}"
    )


@dataclass(frozen=True, eq=False)
class MinNormSolution:
    coefficients: np.ndarray
    jitter_used: float
    method: str  # "gram" or "qr"
    residual: float


def _residual_ok(A, C, Y) -> tuple[bool, float]:
    R = A @ C - Y
    res = float(np.max(np.abs(R))) if R.size else 0.0
    scale = max(1.0, float(np.max(np.abs(Y))) if Y.size else 0.0)
    return res <= RESIDUAL_RTOL * scale, res


def _solve_columns(fn, Y, workers):
    if workers <= 1 or Y.shape[1] < 2 * workers:
        return fn(Y)
    chunks = np.array_split(np.arange(Y.shape[1]), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda idx: fn(Y[:, idx]), chunks))
    return np.concatenate(parts, axis=1)


def _qr_min_norm(A, Y, workers):
    # A^* = Q R  =>  A = R^* Q^*, min-norm c = Q R^{-*} y
    Q, R = sla.qr(A.conj().T, mode="economic", check_finite=False)
    diag = np.abs(np.diag(R))
    if diag.size and diag.min() == 0.0:
        raise ConditioningError("feature matrix is exactly rank deficient")
    C = _solve_columns(
        lambda Yb: Q @ sla.solve_triangular(R, Yb, trans="C", check_finite=False), Y, workers
    )
    ok, res = _residual_ok(A, C, Y)
    if not ok or not np.all(np.isfinite(C)):
        raise ConditioningError(
            f"interpolation residual {res:.3e} exceeds tolerance; feature matrix is numerically "
            f"rank deficient (|R| diagonal range {diag.min():.3e}..{diag.max():.3e})"
        )
    return C, res


def min_norm_solve(A, Y, *, workers: int = 1, allow_fallback: bool = True) -> MinNormSolution:
    """Min-norm solution for every column of ``Y`` with one shared factorization."""
    A = _check_matrix(A)
    Y = np.asarray(Y)
    vec = Y.ndim == 1
    Y2 = (Y[:, None] if vec else Y).astype(np.complex128)
    if Y2.shape[0] != A.shape[0]:
        raise DataError(f"right-hand side has {Y2.shape[0]} rows, feature matrix has {A.shape[0]}")
    if not np.all(np.isfinite(Y2)):
        raise DataError("right-hand side contains non-finite values")

    fact = None
    try:
        fact = gram_factorize(A)
    except ConditioningError:
        if not allow_fallback:
            raise
    if fact is not None:
        C = _solve_columns(lambda Yb: A.conj().T @ fact.solve(Yb), Y2, workers)
        ok, res = _residual_ok(A, C, Y2)
        if (ok and fact.jitter_used == 0.0) or not allow_fallback:
            return MinNormSolution(C[:, 0] if vec else C, fact.jitter_used, "gram", res)
    C, res = _qr_min_norm(A, Y2, workers)
    return MinNormSolution(C[:, 0] if vec else C, 0.0, "qr", res)


def min_norm_fit(A, y, *, workers: int = 1) -> np.ndarray:
    """argmin ||c||_2 subject to A c = y, for a single right-hand side."""
    y = np.asarray(y)
    if y.ndim != 1:
        raise DataError("min_norm_fit expects a vector; use min_norm_fit_multi for matrices")
    return min_norm_solve(A, y, workers=workers).coefficients


def min_norm_fit_multi(A, Y, *, workers: int = 1) -> np.ndarray:
    """Column-wise min-norm solutions; returns an (N, columns) complex matrix."""
    Y = np.asarray(Y)
    if Y.ndim != 2:
        raise DataError("min_norm_fit_multi expects a 2-D right-hand side")
    return min_norm_solve(A, Y, workers=workers).coefficients


def gram_spectrum_bounds(A) -> tuple[float, float]:
    """Extreme eigenvalues of the normalized Gram matrix (1/N) A A^*."""
    A = np.asarray(A, dtype=np.complex128)
    ev = sla.eigvalsh(gram_matrix(A) / A.shape[1])
    return float(ev[0]), float(ev[-1])


def gram_deviation(A) -> float:
    """Spectral norm ||(1/N) A A^* - I||_2."""
    lo, hi = gram_spectrum_bounds(A)
    return max(abs(1.0 - lo), abs(hi - 1.0))
