"""Kernel interpolation baselines: RBF, Laplace and Matern kernels.

The Matern kernel needs the modified Bessel function K_nu for arbitrary real
order. ``bessel_k`` implements Temme's method: a series for K_mu, K_{mu+1} with
|mu| <= 1/2 when x < 2, Steed's continued fraction otherwise, then upward
recurrence in the order. It is vectorized over x for a fixed order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.spatial.distance import cdist

from .core import ConditioningError, DataError, KernelSpec, ParameterError
from .solver import JITTER_LADDER

_EPS = 1e-16
_MAXIT = 10000

# Taylor coefficients of 1/Gamma(z) = sum_k c_k z^k (Abramowitz & Stegun 6.1.34)
_RGAMMA = (
    0.0,
    1.0,
    0.5772156649015329,
    -0.6558780715202538,
    -0.0420026350340952,
    0.1665386113822915,
    -0.0421977345555443,
    -0.0096219715278770,
    0.0072189432466630,
    -0.0011651675918591,
    -0.0002152416741149,
    0.0001280502823882,
    -0.0000201348547807,
    -0.0000012504934821,
    0.0000011330272320,
    -0.0000002056338417,
    0.0000000061160950,
    0.0000000050020075,
    -0.0000000011812746,
    0.0000000001043427,
    0.0000000000077823,
    -0.0000000000036968,
    0.0000000000005100,
    -0.0000000000000206,
    -0.0000000000000054,
    0.0000000000000014,
    0.0000000000000001,
)


def _rgamma1p(x: float) -> float:
    """1 / Gamma(1 + x) for |x| <= 1/2."""
    return sum(c * x ** (k - 1) for k, c in enumerate(_RGAMMA) if k >= 1)


def _temme_gammas(mu: float):
    odd = [c for k, c in enumerate(_RGAMMA) if k >= 2 and k % 2 == 0]  # coefficients of x^1, x^3, ...
    even = [c for k, c in enumerate(_RGAMMA) if k >= 3 and k % 2 == 1]  # x^2, x^4, ...
    mu2 = mu * mu
    gam1 = -sum(c * mu2**i for i, c in enumerate(odd))
    gam2 = 1.0 + sum(c * mu2 ** (i + 1) for i, c in enumerate(even))
    return gam1, gam2, _rgamma1p(mu), _rgamma1p(-mu)


def _k_small(x: np.ndarray, mu: float):
    """K_mu(x), K_{mu+1}(x) by Temme's series, valid for 0 < x < 2."""
    x2 = 0.5 * x
    pimu = math.pi * mu
    fact = 1.0 if abs(pimu) < _EPS else pimu / math.sin(pimu)
    d = -np.log(x2)
    e = mu * d
    with np.errstate(invalid="ignore", divide="ignore"):
        fact2 = np.where(np.abs(e) < _EPS, 1.0, np.sinh(e) / np.where(e == 0, 1.0, e))
    gam1, gam2, gampl, gammi = _temme_gammas(mu)
    ff = fact * (gam1 * np.cosh(e) + gam2 * fact2 * d)
    total = ff.copy()
    ee = np.exp(e)
    p = 0.5 * ee / gampl
    q = 0.5 / (ee * gammi)
    c = np.ones_like(x)
    dd = x2 * x2
    total1 = p.copy()
    mu2 = mu * mu
    for i in range(1, _MAXIT):
        ff = (i * ff + p + q) / (i * i - mu2)
        c = c * dd / i
        p = p / (i - mu)
        q = q / (i + mu)
        delta = c * ff
        total += delta
        total1 += c * (p - i * ff)
        if np.all(np.abs(delta) < np.abs(total) * _EPS):
            break
    return total, total1 * (2.0 / x)


def _k_large(x: np.ndarray, mu: float):
    """K_mu(x), K_{mu+1}(x) by Steed's continued fraction, valid for x >= 2."""
    mu2 = mu * mu
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(x)
    q2 = np.ones_like(x)
    a1 = 0.25 - mu2
    q = np.full_like(x, a1)
    c = np.full_like(x, a1)
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, _MAXIT):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h = h + delh
        dels = q * delh
        s = s + dels
        if np.all(np.abs(dels / s) < _EPS):
            break
    h = a1 * h
    kmu = np.sqrt(math.pi / (2.0 * x)) * np.exp(-x) / s
    k1 = kmu * (mu + x + 0.5 - h) / x
    return kmu, k1


def bessel_k(nu: float, x) -> np.ndarray:
    """Modified Bessel function of the second kind K_nu(x) for real nu and x > 0."""
    nu = abs(float(nu))  # K_{-nu} = K_nu
    xa = np.asarray(x, dtype=np.float64)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if np.any(xa <= 0) or not np.all(np.isfinite(xa)):
        raise ParameterError("bessel_k needs finite x > 0")
    nl = int(nu + 0.5)
    mu = nu - nl
    kmu = np.empty_like(xa)
    k1 = np.empty_like(xa)
    small = xa < 2.0
    if np.any(small):
        kmu[small], k1[small] = _k_small(xa[small], mu)
    if np.any(~small):
        kmu[~small], k1[~small] = _k_large(xa[~small], mu)
    two_over_x = 2.0 / xa
    for i in range(1, nl + 1):
        kmu, k1 = k1, (mu + i) * two_over_x * k1 + kmu
    return kmu[0] if scalar else kmu


def matern_from_distance(r, nu: float, sigma: float) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    out = np.ones_like(r)
    pos = r > 0
    if np.any(pos):
        z = math.sqrt(2.0 * nu) * r[pos] / sigma
        with np.errstate(over="ignore", under="ignore", divide="ignore"):
            kv = bessel_k(nu, z)
            logv = (1.0 - nu) * math.log(2.0) - math.lgamma(nu) + nu * np.log(z) + np.log(kv)
            out[pos] = np.exp(logv)
    return out


def _points(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return X[:, None] if X.ndim == 1 else X


def kernel_matrix(spec: KernelSpec, X, Y) -> np.ndarray:
    X, Y = _points(X), _points(Y)
    if X.shape[1] != Y.shape[1]:
        raise DataError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    if spec.kind == "rbf":
        return np.exp(-spec.gamma * cdist(X, Y, "sqeuclidean"))
    if spec.kind == "laplace":
        return np.exp(-spec.gamma * cdist(X, Y, "cityblock"))
    return matern_from_distance(cdist(X, Y, "euclidean"), spec.nu, spec.sigma)


def kernel_eval(spec: KernelSpec, x, y) -> float:
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise DataError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    return float(kernel_matrix(spec, x[None, :], y[None, :])[0, 0])


@dataclass(frozen=True, eq=False)
class KernelInterpolant:
    spec: KernelSpec
    centers: np.ndarray
    weights: np.ndarray
    jitter_used: float = 0.0

    def __post_init__(self):
        if self.weights.shape[0] != self.centers.shape[0]:
            raise DataError("weights length must equal the number of centers")


def _factor(K: np.ndarray):
    eye = np.eye(K.shape[0])
    scale = float(np.max(np.diag(K))) if K.size else 1.0
    for t in JITTER_LADDER:
        jitter = scale * t
        try:
            return sla.cho_factor(K + jitter * eye if jitter else K, lower=True, check_finite=False), jitter
        except np.linalg.LinAlgError:
            continue
    lam = float(np.linalg.eigvalsh(K)[0])
    raise ConditioningError(f"kernel matrix not factorizable at maximum jitter; smallest eigenvalue {lam:.3e}")


def kernel_fit_weights(spec: KernelSpec, X, Y):
    """Dual weights for every target column with a single Cholesky factorization.

    Returns (weights, jitter_used) with weights of shape (centers, columns).
    """
    X = _points(X)
    Y = np.asarray(Y, dtype=np.float64)
    vec = Y.ndim == 1
    Y2 = Y[:, None] if vec else Y
    if Y2.shape[0] != X.shape[0]:
        raise DataError(f"{Y2.shape[0]} targets for {X.shape[0]} centers")
    if X.shape[0] > 1 and np.unique(X, axis=0).shape[0] != X.shape[0]:
        raise DataError("kernel interpolation needs distinct centers")
    K = kernel_matrix(spec, X, X)
    cf, jitter = _factor(0.5 * (K + K.T))
    W = sla.cho_solve(cf, Y2, check_finite=False)
    return (W[:, 0] if vec else W), jitter


def kernel_fit(spec: KernelSpec, X, Y) -> list[KernelInterpolant]:
    X = _points(X)
    W, jitter = kernel_fit_weights(spec, X, Y)
    W = W[:, None] if W.ndim == 1 else W
    centers = X.copy()
    centers.setflags(write=False)
    return [KernelInterpolant(spec, centers, W[:, j].copy(), jitter) for j in range(W.shape[1])]


def kernel_predict(interp: KernelInterpolant, x) -> float:
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape[0] != interp.centers.shape[1]:
        raise DataError(f"point dimension {x.shape[0]} does not match center dimension {interp.centers.shape[1]}")
    return float(kernel_matrix(interp.spec, x[None, :], interp.centers)[0] @ interp.weights)


def kernel_predict_many(spec: KernelSpec, centers, weights, X) -> np.ndarray:
    return kernel_matrix(spec, X, centers) @ weights


@dataclass(frozen=True, eq=False)
class KernelOperatorModel:
    """Kernel baseline for the sample-to-sample map: one weight column per output point."""

    spec: KernelSpec
    centers: np.ndarray
    weights: np.ndarray
    jitter_used: float

    def predict(self, U) -> np.ndarray:
        U = np.atleast_2d(np.asarray(U, dtype=np.float64))
        if U.shape[1] != self.centers.shape[1]:
            raise DataError(f"input length {U.shape[1]} does not match training inputs {self.centers.shape[1]}")
        return kernel_predict_many(self.spec, self.centers, self.weights, U)


def train_kernel_operator(data, spec: KernelSpec) -> KernelOperatorModel:
    W, jitter = kernel_fit_weights(spec, data.inputs, data.outputs)
    return KernelOperatorModel(spec, np.array(data.inputs), W, jitter)
