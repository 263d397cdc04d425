"""Random feature operator learning: training, prediction and recovery maps.

The learned operator is G_hat = R_v o f_hat o S_u. ``train_operator`` fits the
finite-dimensional map f_hat on sample vectors, ``predict_samples`` evaluates
it, and ``infer`` lifts the predicted output vector to a function through a
min-norm random feature interpolant on the output grid (R_v).
"""

from __future__ import annotations

import threading
from typing import Optional

import numpy as np

from .core import (
    CollocationGrid,
    DataError,
    FieldSample,
    OperatorDataset,
    OperatorModel,
    ParameterError,
    RandomFeatureInterpolant,
    RFConfig,
    derive_seed,
    min_separation,
)
from .features import assemble, sample_ensemble
from .solver import min_norm_solve


def suggest_recovery_gamma(grid: CollocationGrid, distribution: str = "cauchy") -> float:
    """Default feature scale for the output-side recovery map.

    Cauchy features use 0.5 / K and Gaussian features 1 / K**2, K being the
    point separation. Much smaller scales leave too few high frequencies to
    interpolate rough data (numerically rank deficient A); much larger ones make
    the interpolant collapse towards zero between grid points.
    """
    if grid.size < 2:
        return 1.0
    K = min_separation(grid)
    return 1.0 / K**2 if distribution == "gaussian" else 0.5 / K


def default_recovery_config(grid: CollocationGrid, distribution: str, seed: int) -> RFConfig:
    return RFConfig(
        distribution=distribution,
        gamma=suggest_recovery_gamma(grid, distribution),
        count=max(1000, 10 * grid.size),
        seed=derive_seed(seed, 1),
    )


def recover(grid: CollocationGrid, values, rf_config: RFConfig, *, workers: int = 1) -> RandomFeatureInterpolant:
    """Min-norm random feature interpolant of ``values`` on ``grid``."""
    v = values.values if isinstance(values, FieldSample) else np.asarray(values, dtype=np.float64).ravel()
    if isinstance(values, FieldSample) and not values.grid.same_as(grid):
        raise DataError("field sample lives on a different grid")
    if v.shape[0] != grid.size:
        raise DataError(f"{v.shape[0]} values for a grid of {grid.size} points")
    if rf_config.count < grid.size:
        raise ParameterError(f"recovery needs N >= grid size (N={rf_config.count}, m={grid.size})")
    ens = sample_ensemble(rf_config, grid.dim)
    A = assemble(ens, grid.points, workers=workers)
    sol = min_norm_solve(A, v, workers=workers)
    return RandomFeatureInterpolant(ens, sol.coefficients, grid)


def _duplicate_rows(U: np.ndarray) -> list[list[int]]:
    _, inv, counts = np.unique(U, axis=0, return_inverse=True, return_counts=True)
    inv = np.asarray(inv).ravel()
    groups = []
    for g in np.flatnonzero(counts > 1):
        groups.append(np.flatnonzero(inv == g).tolist())
    return groups


def _dedupe(data: OperatorDataset) -> OperatorDataset:
    """Drop repeated (input, output) pairs; conflicting outputs for one input are an error."""
    groups = _duplicate_rows(data.inputs)
    if not groups:
        return data
    conflicts = [g for g in groups if not all(np.array_equal(data.outputs[g[0]], data.outputs[i]) for i in g[1:])]
    if conflicts:
        raise DataError(f"duplicate training inputs with different outputs at indices {conflicts}")
    drop = {i for g in groups for i in g[1:]}
    keep = np.array([i for i in range(len(data)) if i not in drop])
    return data.subset(keep)


def train_operator(
    data: OperatorDataset,
    cfg: RFConfig,
    recovery_config: Optional[RFConfig] = None,
    *,
    workers: int = 1,
) -> OperatorModel:
    """Fit f_hat with one min-norm problem per output point, sharing one factorization.

    Exact repeats of a training pair are collapsed before solving.
    """
    M = len(data)
    if cfg.count < M:
        raise ParameterError(f"interpolation needs N >= number of training pairs (N={cfg.count}, M={M})")
    data = _dedupe(data)
    ens = sample_ensemble(cfg, data.input_grid.size)
    A = assemble(ens, data.inputs, workers=workers)
    sol = min_norm_solve(A, data.outputs, workers=workers)
    if recovery_config is None:
        recovery_config = default_recovery_config(data.output_grid, cfg.distribution, cfg.seed)
    return OperatorModel(
        input_ensemble=ens,
        coeff_matrix=sol.coefficients,
        input_grid=data.input_grid,
        output_grid=data.output_grid,
        recovery_config=recovery_config,
        jitter_used=sol.jitter_used,
        meta={"solver": sol.method, "train_count": len(data)},
    )


def predict_many(model: OperatorModel, U) -> np.ndarray:
    """Predicted output vectors for a batch of input vectors, shape (batch, m)."""
    U = np.asarray(U, dtype=np.float64)
    if U.ndim == 1:
        U = U[None, :]
    if U.shape[1] != model.input_grid.size:
        raise DataError(f"input vector length {U.shape[1]} does not match input grid size {model.input_grid.size}")
    W = model.input_ensemble.frequencies
    C = model.coeff_matrix
    out = np.empty((U.shape[0], C.shape[1]))
    step = max(1, 4_000_000 // W.shape[0])
    for s in range(0, U.shape[0], step):
        out[s : s + step] = (np.exp(1j * (U[s : s + step] @ W.T)) @ C).real
    return out


def predict_samples(model: OperatorModel, u_vec) -> np.ndarray:
    u = u_vec.values if isinstance(u_vec, FieldSample) else np.asarray(u_vec, dtype=np.float64)
    if u.ndim != 1:
        raise DataError("predict_samples expects a single input vector")
    return predict_many(model, u)[0]


class _RecoveryMap:
    """Output-side ensemble plus its pseudo-inverse, built once per (config, grid)."""

    def __init__(self, grid: CollocationGrid, cfg: RFConfig):
        if cfg.count < grid.size:
            raise ParameterError(f"recovery needs N >= output grid size (N={cfg.count}, m={grid.size})")
        self.grid = grid
        self.ensemble = sample_ensemble(cfg, grid.dim)
        A = assemble(self.ensemble, grid.points)
        self.pinv = min_norm_solve(A, np.eye(grid.size)).coefficients

    def __call__(self, values: np.ndarray) -> RandomFeatureInterpolant:
        return RandomFeatureInterpolant(self.ensemble, self.pinv @ values, self.grid)


_recovery_cache: dict = {}
_recovery_lock = threading.Lock()


def recovery_map(grid: CollocationGrid, cfg: RFConfig) -> _RecoveryMap:
    key = (cfg, hash(grid))
    with _recovery_lock:
        rm = _recovery_cache.get(key)
        if rm is not None and rm.grid.same_as(grid):
            return rm
    rm = _RecoveryMap(grid, cfg)
    with _recovery_lock:
        if len(_recovery_cache) > 32:
            _recovery_cache.clear()
        _recovery_cache[key] = rm
    return rm


def infer(model: OperatorModel, u: FieldSample) -> RandomFeatureInterpolant:
    """Full function estimate G_hat(u) = R_v(f_hat(S_u(u)))."""
    if not isinstance(u, FieldSample):
        u = FieldSample(model.input_grid, u)
    if not u.grid.same_as(model.input_grid):
        raise DataError("input field is not sampled on the model's input grid")
    cfg = model.recovery_config
    if cfg is None:
        cfg = default_recovery_config(model.output_grid, model.input_ensemble.distribution, model.input_ensemble.seed)
    v = predict_samples(model, u.values)
    return recovery_map(model.output_grid, cfg)(v)
