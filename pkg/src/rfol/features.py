"""Frequency sampling and Fourier feature matrices.

Ensembles are drawn from numpy's PCG64 bit generator. Each frequency consumes
``dim`` consecutive uniforms (coordinate-major), and every uniform is built from
53 random bits as ``(k + 0.5) / 2**53`` so it lies strictly inside (0, 1). Both
laws then go through their exact inverse CDF:

* cauchy:   omega = gamma * tan(pi * (U - 1/2))
* gaussian: omega = sqrt(2 * gamma) * Phi^{-1}(U)     (variance 2*gamma)

A consequence of the sequential layout is prefix consistency: the first ``n``
frequencies of a size-``N`` draw equal a size-``n`` draw with the same seed.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.special import ndtri

from .core import (
    DataError,
    FeatureEnsemble,
    ParameterError,
    RandomFeatureInterpolant,
    RFConfig,
)

# smallest scale for which tan/ndtri outputs stay well inside float64 range
_MIN_GAMMA = 1e-250


def _open_uniforms(count: int, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(int(seed) % 2**64))
    k = rng.integers(0, 2**53, size=count, dtype=np.uint64)
    return (k.astype(np.float64) + 0.5) * 2.0**-53


def _check(dim: int, count: int, gamma: float):
    if int(dim) < 1:
        raise ParameterError(f"dim must be >= 1, got {dim}")
    if int(count) < 1:
        raise ParameterError(f"count must be >= 1, got {count}")
    if not (math.isfinite(gamma) and gamma >= _MIN_GAMMA):
        raise ParameterError(f"gamma must be a positive, non-degenerate scale, got {gamma}")


def sample_cauchy(dim: int, count: int, gamma: float, seed: int) -> FeatureEnsemble:
    """I.i.d. tensor-product Cauchy frequencies with scale ``gamma``.

    The characteristic function is exp(-gamma * ||t||_1), so feature averages
    converge to the Laplace kernel.
    """
    _check(dim, count, gamma)
    u = _open_uniforms(int(dim) * int(count), seed).reshape(int(count), int(dim))
    w = gamma * np.tan(np.pi * (u - 0.5))
    return FeatureEnsemble(w, "cauchy", float(gamma), int(seed) % 2**64)


def sample_gaussian(dim: int, count: int, gamma: float, seed: int) -> FeatureEnsemble:
    """I.i.d. N(0, 2*gamma) frequencies; feature averages converge to exp(-gamma ||x-y||^2)."""
    _check(dim, count, gamma)
    u = _open_uniforms(int(dim) * int(count), seed).reshape(int(count), int(dim))
    w = math.sqrt(2.0 * gamma) * ndtri(u)
    return FeatureEnsemble(w, "gaussian", float(gamma), int(seed) % 2**64)


def sample_ensemble(cfg: RFConfig, dim: int) -> FeatureEnsemble:
    if cfg.distribution == "cauchy":
        return sample_cauchy(dim, cfg.count, cfg.gamma, cfg.seed)
    return sample_gaussian(dim, cfg.count, cfg.gamma, cfg.seed)


def _as_points(points, dim: int) -> np.ndarray:
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None] if dim == 1 else X[None, :]
    if X.ndim != 2 or X.shape[1] != dim:
        got = X.shape[-1] if X.ndim else 0
        raise DataError(f"point dimension {got} does not match ensemble dimension {dim}")
    return X


def assemble(ensemble: FeatureEnsemble, points, *, workers: int = 1, block: int = 256) -> np.ndarray:
    """Dense feature matrix A[j, k] = exp(i <omega_k, x_j>), shape (points, features).

    Rows are always processed in the same fixed blocks, so the result is
    bit-identical for any ``workers``; with ``workers > 1`` blocks run
    concurrently, each writing a disjoint slice of the output.
    """
    X = _as_points(points, ensemble.dim)
    W = ensemble.frequencies
    out = np.empty((X.shape[0], W.shape[0]), dtype=np.complex128)

    def fill(start):
        stop = min(start + block, X.shape[0])
        out[start:stop] = np.exp(1j * (X[start:stop] @ W.T))

    starts = range(0, X.shape[0], block)
    if workers <= 1:
        for s in starts:
            fill(s)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, starts))
    return out


def evaluate_many(interp: RandomFeatureInterpolant, points) -> np.ndarray:
    """Real part of the feature expansion at each row of ``points``."""
    X = _as_points(points, interp.ensemble.dim)
    out = np.empty(X.shape[0])
    W = interp.ensemble.frequencies
    c = interp.coefficients
    # chunk rows so the (rows, N) phase block stays around 32 MB
    step = max(1, 2_000_000 // max(1, W.shape[0]))
    for s in range(0, X.shape[0], step):
        out[s : s + step] = (np.exp(1j * (X[s : s + step] @ W.T)) @ c).real
    return out


def evaluate(interp: RandomFeatureInterpolant, x) -> float:
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape[0] != interp.ensemble.dim:
        raise DataError(f"point dimension {x.shape[0]} does not match ensemble dimension {interp.ensemble.dim}")
    return float(evaluate_many(interp, x[None, :])[0])


def kernel_average(ensemble: FeatureEnsemble, x, y) -> complex:
    """Monte-Carlo kernel estimate (1/N) sum_k exp(i <omega_k, x - y>)."""
    d = np.asarray(x, dtype=np.float64).ravel() - np.asarray(y, dtype=np.float64).ravel()
    if d.shape[0] != ensemble.dim:
        raise DataError(f"point dimension {d.shape[0]} does not match ensemble dimension {ensemble.dim}")
    return complex(np.mean(np.exp(1j * (ensemble.frequencies @ d))))
