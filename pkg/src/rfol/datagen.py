"""Synthetic benchmark generators.

The advection problems learn the map from an initial condition u on the unit
circle to the exact transported solution v(x) = u((x - 0.5) mod 1) at t = 0.5.
Grids are cell-centred, so with an even resolution the transport is an exact
circular shift by resolution/2 samples.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np

from .core import CollocationGrid, DataError, FieldSample, OperatorDataset, ParameterError, derive_seed

SHIFT = 0.5


@dataclass(frozen=True)
class Advection1Params:
    c: tuple = (0.3, 0.7)
    b: tuple = (0.3, 0.6)
    h: tuple = (1.0, 2.0)


@dataclass(frozen=True)
class Advection2Params:
    c1: tuple = (0.2, 0.4)
    w: tuple = (0.05, 0.15)
    h1: tuple = (0.5, 1.5)
    c2: tuple = (0.6, 0.8)
    h2: tuple = (0.5, 1.5)
    a2: tuple = (5.0, 15.0)


@dataclass(frozen=True)
class Advection3Params:
    tau2: float = 9.0
    power: float = 2.0


def square_wave(c: float, b: float, h: float) -> Callable:
    """h on the closed interval [c - b/2, c + b/2], 0 elsewhere."""
    lo, hi = c - 0.5 * b, c + 0.5 * b

    def u(x):
        x = np.asarray(x, dtype=np.float64)
        return np.where((x >= lo) & (x <= hi), h, 0.0)

    return u


def wave_and_bump(c1: float, w: float, h1: float, c2: float, h2: float, a2: float) -> Callable:
    """Square wave of half-width w plus a half-ellipse bump of height h2 centred at c2."""

    def u(x):
        x = np.asarray(x, dtype=np.float64)
        wave = np.where((x >= c1 - w) & (x <= c1 + w), h1, 0.0)
        return wave + np.sqrt(np.maximum(h2**2 - a2**2 * (x - c2) ** 2, 0.0))

    return u


def _line_grid(resolution: int) -> CollocationGrid:
    if resolution < 2:
        raise ParameterError(f"resolution must be >= 2, got {resolution}")
    return CollocationGrid.equispaced(resolution, 0.0, 1.0, name=f"periodic{resolution}")


def _transport(fns: list, grid: CollocationGrid) -> tuple[np.ndarray, np.ndarray]:
    x = grid.points[:, 0]
    n = grid.size
    U = np.stack([f(x) for f in fns])
    shift = SHIFT * n
    if shift == int(shift):
        # same sample points, so the exact solution is a pure index shift
        V = np.roll(U, int(shift), axis=1)
    else:
        xs = np.mod(x - SHIFT, 1.0)
        V = np.stack([f(xs) for f in fns])
    return U, V


def _draw_params(seed: int, M: int, boxes: list) -> np.ndarray:
    """(M, len(boxes)) uniform parameters; sample k uses its own derived stream."""
    lo = np.array([b[0] for b in boxes], dtype=np.float64)
    hi = np.array([b[1] for b in boxes], dtype=np.float64)
    out = np.empty((M, len(boxes)))
    for k in range(M):
        out[k] = np.random.default_rng(derive_seed(seed, k)).uniform(lo, hi)
    return out


def gen_advection1(M: int, resolution: int = 40, seed: int = 0, params: Advection1Params = Advection1Params()) -> OperatorDataset:
    grid = _line_grid(resolution)
    fns = [square_wave(*p) for p in _draw_params(seed, M, [params.c, params.b, params.h])]
    U, V = _transport(fns, grid)
    meta = {"problem": "advection1", "seed": int(seed), "params": asdict(params)}
    return OperatorDataset(grid, grid, U, V, meta)


def gen_advection2(M: int, resolution: int = 40, seed: int = 0, params: Advection2Params = Advection2Params()) -> OperatorDataset:
    grid = _line_grid(resolution)
    boxes = [getattr(params, k) for k in ("c1", "w", "h1", "c2", "h2", "a2")]
    fns = [wave_and_bump(*p) for p in _draw_params(seed, M, boxes)]
    U, V = _transport(fns, grid)
    meta = {"problem": "advection2", "seed": int(seed), "params": asdict(params)}
    return OperatorDataset(grid, grid, U, V, meta)


def _grid_shape(grid: CollocationGrid) -> tuple[tuple[int, ...], list[np.ndarray]]:
    """Axis counts and spacings of a uniform periodic tensor grid, or DataError."""
    axes = [np.unique(grid.points[:, i]) for i in range(grid.dim)]
    shape = tuple(len(a) for a in axes)
    if int(np.prod(shape)) != grid.size:
        raise DataError("grid is not a full tensor-product grid")
    mesh = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=1)
    if not np.array_equal(mesh, grid.points):
        raise DataError("grid points are not in C-order tensor layout")
    spacings = []
    for i, a in enumerate(axes):
        L = grid.domain_hi[i] - grid.domain_lo[i]
        h = L / len(a)
        if len(a) > 1 and not np.allclose(np.diff(a), h, rtol=1e-9, atol=0):
            raise DataError("grid is not equispaced with periodic spacing (domain length / count)")
        spacings.append(h)
    return shape, spacings


def laplacian_symbol(grid: CollocationGrid) -> np.ndarray:
    """Eigenvalues of the periodic finite-difference -Laplacian in FFT layout."""
    shape, spacings = _grid_shape(grid)
    lam = np.zeros(shape)
    for i, (n, h) in enumerate(zip(shape, spacings)):
        k = np.fft.fftfreq(n) * n
        li = (4.0 / h**2) * np.sin(np.pi * k / n) ** 2
        lam = lam + li.reshape([-1 if j == i else 1 for j in range(len(shape))])
    return lam


def spectral_amplitudes(grid: CollocationGrid, tau: float, power: float) -> np.ndarray:
    """Per-mode standard deviations (lambda_k + tau^2)^(-power/2), mean mode removed."""
    lam = laplacian_symbol(grid)
    amp = (lam + tau**2) ** (-0.5 * power)
    amp.flat[0] = 0.0
    return amp


def gp_covariance(grid: CollocationGrid, tau: float, power: float) -> np.ndarray:
    """Covariance matrix of ``gp_sample`` draws (circulant; dense for testing)."""
    amp = spectral_amplitudes(grid, tau, power)
    row = np.fft.ifftn(amp**2).real.ravel()
    shape = amp.shape
    idx = np.indices(shape).reshape(len(shape), -1).T
    diff = (idx[:, None, :] - idx[None, :, :]) % np.array(shape)
    return row[np.ravel_multi_index(tuple(diff.transpose(2, 0, 1)), shape)]


def gp_sample(grid: CollocationGrid, tau: float, power: float, seed: int, count: Optional[int] = None):
    """Zero-mean periodic Gaussian random field with covariance (-Lap + tau^2)^(-power).

    White noise is filtered in Fourier space, which keeps conjugate symmetry
    automatically. Returns a FieldSample, or an array of ``count`` draws.
    """
    shape, _ = _grid_shape(grid)
    amp = spectral_amplitudes(grid, tau, power)
    rng = np.random.default_rng(seed)
    n = 1 if count is None else int(count)
    z = rng.standard_normal((n, *shape))
    axes = tuple(range(1, len(shape) + 1))
    f = np.fft.ifftn(np.fft.fftn(z, axes=axes) * amp, axes=axes).real
    f = f.reshape(n, -1)
    f -= f.mean(axis=1, keepdims=True)
    return FieldSample(grid, f[0]) if count is None else f


def gen_advection3(M: int, resolution: int = 200, seed: int = 0, params: Advection3Params = Advection3Params()) -> OperatorDataset:
    grid = _line_grid(resolution)
    tau = np.sqrt(params.tau2)
    base = np.stack([gp_sample(grid, tau, params.power, derive_seed(seed, k)).values for k in range(M)]) if M else np.empty((0, resolution))
    U = sign_field(base)
    shift = SHIFT * resolution
    if shift != int(shift):
        raise ParameterError("advection3 needs an even resolution so the transport stays on the grid")
    V = np.roll(U, int(shift), axis=1)
    meta = {"problem": "advection3", "seed": int(seed), "params": asdict(params)}
    return OperatorDataset(grid, grid, U, V, meta)


def sign_field(base) -> np.ndarray:
    """-1 + 2 * 1{base >= 0}."""
    return -1.0 + 2.0 * (np.asarray(base) >= 0.0)


@dataclass(frozen=True)
class LaplaceTarget:
    """f(x) = sum_i a_i exp(-gamma |x - z_i|), an element of the Laplace-kernel RKHS."""

    coeffs: np.ndarray
    centers: np.ndarray
    gamma: float

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        flat = x.reshape(-1)
        out = np.exp(-self.gamma * np.abs(flat[:, None] - self.centers[None, :])) @ self.coeffs
        return out.reshape(x.shape) if x.ndim else float(out[0])


def gen_rkhs_regression(
    m: int,
    kernel_gamma: float,
    n_centers: int,
    seed: int,
    *,
    coeffs=None,
    centers=None,
    centered_grid: bool = False,
    centers_on_grid: bool = False,
):
    """Equispaced samples (endpoints included) of a random Laplace-kernel expansion.

    With ``centers_on_grid`` the random centers are distinct grid points, so the
    target lies in the span of the kernel translates at the samples and exact
    kernel interpolation recovers it everywhere.
    """
    if m < 2:
        raise ParameterError("m must be >= 2")
    grid = CollocationGrid.equispaced(m, 0.0, 1.0, centered=centered_grid)
    rng = np.random.default_rng(seed)
    if centers is not None:
        z = np.asarray(centers, dtype=np.float64)
    elif centers_on_grid:
        if n_centers > m:
            raise ParameterError("n_centers exceeds the number of grid points")
        z = np.sort(rng.choice(grid.points[:, 0], n_centers, replace=False))
    else:
        z = rng.uniform(0.0, 1.0, n_centers)
    a = rng.uniform(-1.0, 1.0, z.shape[0]) if coeffs is None else np.asarray(coeffs, dtype=np.float64)
    target = LaplaceTarget(a, z, float(kernel_gamma))
    return grid, FieldSample(grid, target(grid.points[:, 0])), target


GENERATORS = {
    "advection1": (gen_advection1, 40),
    "advection2": (gen_advection2, 40),
    "advection3": (gen_advection3, 200),
}


def generate(problem: str, M: int, resolution: Optional[int] = None, seed: int = 0) -> OperatorDataset:
    if problem not in GENERATORS:
        raise ParameterError(f"unknown problem {problem!r}; expected one of {sorted(GENERATORS)}")
    fn, default_res = GENERATORS[problem]
    return fn(M, default_res if resolution is None else resolution, seed)


__all__ = [
    "Advection1Params",
    "Advection2Params",
    "Advection3Params",
    "GENERATORS",
    "LaplaceTarget",
    "gen_advection1",
    "gen_advection2",
    "gen_advection3",
    "gen_rkhs_regression",
    "generate",
    "gp_covariance",
    "gp_sample",
    "sign_field",
    "laplacian_symbol",
    "spectral_amplitudes",
    "square_wave",
    "wave_and_bump",
]
