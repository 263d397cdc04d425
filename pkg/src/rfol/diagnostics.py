"""Empirical checks of the concentration and convergence behaviour."""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import qmc

from .core import CollocationGrid, DataError, FieldSample, ParameterError, RFConfig, derive_seed, min_separation
from .datagen import gen_advection1, gen_rkhs_regression
from .features import assemble, sample_ensemble
from .operator import predict_many, recover, train_operator
from .solver import gram_deviation


def fill_in_distance(grid: CollocationGrid, probe_count: int = 4096, seed: int = 0) -> float:
    """Lower bound on max_{x in D} min_j ||x - x_j|| from scrambled Sobol probes.

    Probes are rounded up to a power of two (Sobol balance) and the domain
    corners are always included.
    """
    if grid.size == 0:
        raise DataError("fill distance of an empty grid")
    if probe_count < 1000:
        raise ParameterError("probe_count must be >= 1000")
    d = grid.dim
    m = int(math.ceil(math.log2(probe_count)))
    u = qmc.Sobol(d, scramble=True, seed=seed).random_base2(m)
    corners = np.array(np.meshgrid(*[[0.0, 1.0]] * d, indexing="ij")).reshape(d, -1).T
    u = np.vstack([u, corners])
    probes = grid.domain_lo + u * (grid.domain_hi - grid.domain_lo)
    dist, _ = cKDTree(grid.points).query(probes, k=1)
    return float(dist.max())


def eta_from_features(N: int, m: int, delta: float, C: float = 6.0) -> float:
    """Solve N = C eta^-2 m log(m / (2 delta)) for eta."""
    return math.sqrt(C * m * math.log(m / (2.0 * delta)) / N)


def features_for_eta(eta: float, m: int, delta: float, C: float = 6.0) -> int:
    return int(math.ceil(C * m * math.log(m / (2.0 * delta)) / eta**2))


def gamma_for_eta(grid: CollocationGrid, eta: float) -> float:
    """Smallest scale with m exp(-gamma K) <= eta."""
    return math.log(grid.size / eta) / min_separation(grid)


@dataclass
class ConcentrationResult:
    deviations: np.ndarray
    eta: float
    eta_bound: float  # 2 * eta
    gamma_required: Optional[float]
    p95: float = field(init=False)
    fraction_within: float = field(init=False)

    def __post_init__(self):
        self.p95 = float(np.percentile(self.deviations, 95))
        self.fraction_within = float(np.mean(self.deviations <= self.eta_bound))


def concentration_check(
    grid: CollocationGrid,
    distribution: str,
    gamma: float,
    N: int,
    trials: int,
    seed: int,
    *,
    delta: float = 0.05,
    eta: Optional[float] = None,
    C: float = 6.0,
    workers: int = 1,
) -> ConcentrationResult:
    """Spectral deviation ||(1/N) A A^* - I||_2 over independent feature draws.

    ``eta`` defaults to the value implied by N through the feature-count
    condition with constant C.
    """
    m = grid.size
    if eta is None:
        eta = eta_from_features(N, m, delta, C) if m > 1 else 0.0
    g_req = gamma_for_eta(grid, eta) if (m > 1 and eta > 0) else None

    def trial(t):
        ens = sample_ensemble(RFConfig(distribution, gamma, N, derive_seed(seed, t)), grid.dim)
        return gram_deviation(assemble(ens, grid.points))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            devs = list(pool.map(trial, range(trials)))
    else:
        devs = [trial(t) for t in range(trials)]
    return ConcentrationResult(np.asarray(devs), eta, 2.0 * eta, g_req)


def _values(x) -> np.ndarray:
    if isinstance(x, FieldSample):
        return x.values
    return np.asarray(x, dtype=np.float64)


def relative_test_error(predictions: Sequence, truths: Sequence, volume: float = 1.0) -> float:
    """sqrt(sum_k ||G(u_k) - G_hat(u_k)||^2 / sum_k ||G(u_k)||^2) with grid-quadrature L2 norms.

    Accepts lists of FieldSample or 2-D arrays (samples x points). Quadrature
    weights are uniform (vol / m) and cancel in the ratio.
    """
    P = np.atleast_2d(np.array([_values(p) for p in predictions]) if not isinstance(predictions, np.ndarray) else predictions)
    T = np.atleast_2d(np.array([_values(t) for t in truths]) if not isinstance(truths, np.ndarray) else truths)
    if P.shape != T.shape:
        raise DataError(f"prediction shape {P.shape} does not match truth shape {T.shape}")
    if isinstance(truths, (list, tuple)) and truths and isinstance(truths[0], FieldSample):
        volume = truths[0].grid.volume
        g0 = truths[0].grid
        for p in list(predictions) + list(truths):
            if isinstance(p, FieldSample) and not p.grid.same_as(g0):
                raise DataError("predictions and truths must share one output grid")
    w = volume / T.shape[1]
    den = w * np.sum(T * T)
    if den == 0.0:
        raise DataError("relative error undefined: all truths are zero")
    num = w * np.sum((T - P) ** 2)
    return float(math.sqrt(num / den))


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


@dataclass(frozen=True)
class DecayTask:
    """Named decay-study workload.

    * ``advection1``: operator learning on Advection I with ``train`` pairs and
      ``test`` held out. ``train`` must not exceed the smallest N.
    * ``rkhs``: 1-D regression of a Laplace-kernel expansion centred on grid points,
      from ``points`` equispaced samples; error measured on a 10x finer grid. The
      kernel-limit interpolant is exact here, so the error isolates the N term.
    * ``representable``: the training grid itself is the test set, so errors sit at
      solver precision for every N.

    ``gamma=None`` picks 1e-3 for advection1 and ``target_gamma`` otherwise.
    """

    name: str = "advection1"
    distribution: str = "cauchy"
    gamma: Optional[float] = None
    train: int = 200
    test: int = 200
    resolution: int = 40
    points: int = 20
    target_gamma: float = 5.0
    n_centers: int = 5
    data_seed: int = 0


@dataclass
class DecayResult:
    N: list
    median_error: list
    median_seconds: list
    error_slope: float
    time_slope: float
    errors: np.ndarray  # (len(N), trials)
    seconds: np.ndarray

    def rows(self):
        return list(zip(self.N, self.median_error, self.median_seconds))


def decay_study(
    task: DecayTask,
    N_list: Sequence[int],
    trials: int,
    seed: int,
    *,
    error_floor: float = 1e-14,
) -> DecayResult:
    """Median test error and training seconds per feature count, plus log-log slopes.

    Errors are clamped below at ``error_floor`` before fitting; the log fit is
    undefined at exact zeros. Trials run sequentially so timings are not
    distorted by contention.
    """
    N_list = [int(n) for n in N_list]
    if len(N_list) < 4 or any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise ParameterError("N_list must be increasing with at least 4 values")
    errs = np.empty((len(N_list), trials))
    secs = np.empty((len(N_list), trials))

    if task.name == "advection1":
        gamma = 1e-3 if task.gamma is None else task.gamma
        M = task.train
        if M > N_list[0]:
            raise ParameterError(f"train={M} exceeds the smallest feature count {N_list[0]}")
        data = gen_advection1(M + task.test, task.resolution, task.data_seed)
        train, test = data.subset(slice(0, M)), data.subset(slice(M, None))

        def run(n, s):
            t0 = time.perf_counter()
            model = train_operator(train, RFConfig(task.distribution, gamma, n, s))
            dt = time.perf_counter() - t0
            return relative_test_error(predict_many(model, test.inputs), test.outputs), dt

    elif task.name in ("rkhs", "representable"):
        gamma = task.target_gamma if task.gamma is None else task.gamma
        grid, sample, target = gen_rkhs_regression(
            task.points, task.target_gamma, task.n_centers, task.data_seed, centers_on_grid=True
        )
        fine = np.linspace(0.0, 1.0, 10 * task.points + 1)
        truth = target(fine)
        eval_x, eval_y = (grid.points[:, 0], sample.values) if task.name == "representable" else (fine, truth)

        def run(n, s):
            t0 = time.perf_counter()
            interp = recover(grid, sample, RFConfig(task.distribution, gamma, n, s))
            dt = time.perf_counter() - t0
            return relative_test_error(interp(eval_x)[None, :], eval_y[None, :]), dt

    else:
        raise ParameterError(f"unknown decay task {task.name!r}")

    for i, n in enumerate(N_list):
        for t in range(trials):
            errs[i, t], secs[i, t] = run(n, derive_seed(seed, t))
    med_err = np.maximum(np.median(errs, axis=1), error_floor)
    med_sec = np.median(secs, axis=1)
    return DecayResult(
        N=N_list,
        median_error=med_err.tolist(),
        median_seconds=med_sec.tolist(),
        error_slope=loglog_slope(N_list, med_err),
        time_slope=loglog_slope(N_list, med_sec),
        errors=errs,
        seconds=secs,
    )


@dataclass
class KernelLimitResult:
    sup_diffs: np.ndarray
    tolerance: float

    @property
    def passed(self) -> int:
        return int(np.sum(self.sup_diffs <= self.tolerance))


def kernel_limit_check(
    m: int = 20,
    gamma: float = 1.0,
    N: int = 200_000,
    seeds: Sequence[int] = tuple(range(10)),
    test_points: int = 200,
    tolerance: float = 0.05,
) -> KernelLimitResult:
    """Sup-norm gap between Cauchy feature min-norm interpolation and Laplace-kernel
    interpolation of the same data, one trial per seed.

    Each seed draws m uniform points on [0, 1], a smooth target, and a fresh ensemble.
    """
    from .kernels import kernel_fit_weights, kernel_predict_many
    from .core import KernelSpec

    spec = KernelSpec("laplace", gamma=gamma)
    xt = np.linspace(0.0, 1.0, test_points)
    diffs = []
    for s in seeds:
        rng = np.random.default_rng(derive_seed(s, 7))
        x = np.sort(rng.uniform(0.0, 1.0, m))
        y = np.sin(2 * np.pi * x) + 0.5 * np.cos(3 * np.pi * x)
        grid = CollocationGrid(x[:, None], [0.0], [1.0])
        interp = recover(grid, y, RFConfig("cauchy", gamma, N, derive_seed(s, 8)))
        w, _ = kernel_fit_weights(spec, x[:, None], y)
        diffs.append(float(np.max(np.abs(interp(xt) - kernel_predict_many(spec, x[:, None], w, xt[:, None])))))
    return KernelLimitResult(np.asarray(diffs), tolerance)
