"""Domain types shared across the package.

Every container here is a frozen dataclass holding float64 / complex128 numpy
arrays. Arrays are copied and marked read-only on construction, so instances
can be shared between threads without further care.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree


class RFOLError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ParameterError(RFOLError, ValueError):
    exit_code = 2


class DataError(RFOLError, ValueError):
    exit_code = 3


class ConditioningError(RFOLError, ArithmeticError):
    exit_code = 4


DISTRIBUTIONS = ("cauchy", "gaussian")
KERNEL_KINDS = ("rbf", "matern", "laplace")


def _frozen(a, dtype=np.float64) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def _plain(meta) -> dict:
    # JSON-normalized copy so metadata compares equal after a file round trip
    return json.loads(json.dumps(dict(meta or {})))


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministic 64-bit child seed from a parent seed and integer keys."""
    ss = np.random.SeedSequence([int(seed) % 2**64, *[int(k) for k in keys]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True, eq=False)
class CollocationGrid:
    points: np.ndarray
    domain_lo: np.ndarray
    domain_hi: np.ndarray
    name: str = ""

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
            raise DataError(f"grid points must be a non-empty (count, dim) array, got shape {pts.shape}")
        lo = np.atleast_1d(np.asarray(self.domain_lo, dtype=np.float64))
        hi = np.atleast_1d(np.asarray(self.domain_hi, dtype=np.float64))
        if lo.shape != (pts.shape[1],) or hi.shape != (pts.shape[1],):
            raise DataError("domain bounds must have one entry per dimension")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)) and np.all(hi > lo)):
            raise DataError("domain bounds must be finite with hi > lo")
        if not np.all(np.isfinite(pts)):
            raise DataError("grid points must be finite")
        if np.any(pts < lo) or np.any(pts > hi):
            raise DataError("grid points must lie inside the domain box")
        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "domain_lo", _frozen(lo))
        object.__setattr__(self, "domain_hi", _frozen(hi))
        if pts.shape[0] > 1 and min_separation(self) <= 0.0:
            raise DataError("grid points must be pairwise distinct")

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def __len__(self) -> int:
        return self.size

    @property
    def volume(self) -> float:
        return float(np.prod(self.domain_hi - self.domain_lo))

    @classmethod
    def equispaced(cls, count: int, lo: float = 0.0, hi: float = 1.0, *, centered: bool = True, name: str = ""):
        """`count` equispaced points on [lo, hi].

        With ``centered`` the points are cell midpoints lo + (j + 1/2) h, which keeps
        them strictly inside the open interval and makes the grid periodic-uniform.
        Otherwise both endpoints are included.
        """
        if count < 1:
            raise ParameterError("count must be >= 1")
        if centered:
            h = (hi - lo) / count
            pts = lo + (np.arange(count) + 0.5) * h
        else:
            pts = np.linspace(lo, hi, count) if count > 1 else np.array([lo])
        return cls(pts[:, None], [lo], [hi], name=name)

    @classmethod
    def tensor(cls, counts: Sequence[int], lo=0.0, hi=1.0, *, name: str = ""):
        """Cell-centred tensor grid in C order (last axis fastest)."""
        d = len(counts)
        lo = np.broadcast_to(np.asarray(lo, dtype=np.float64), (d,))
        hi = np.broadcast_to(np.asarray(hi, dtype=np.float64), (d,))
        axes = [lo[i] + (np.arange(n) + 0.5) * (hi[i] - lo[i]) / n for i, n in enumerate(counts)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        return cls(pts, lo, hi, name=name)

    def same_as(self, other: "CollocationGrid") -> bool:
        return (
            self.points.shape == other.points.shape
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.domain_lo, other.domain_lo)
            and np.array_equal(self.domain_hi, other.domain_hi)
        )

    def __eq__(self, other):
        if not isinstance(other, CollocationGrid):
            return NotImplemented
        return self.same_as(other) and self.name == other.name

    def __hash__(self):
        return hash((self.points.tobytes(), self.domain_lo.tobytes(), self.domain_hi.tobytes(), self.name))


@dataclass(frozen=True, eq=False)
class FieldSample:
    grid: CollocationGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).ravel()
        if v.shape[0] != self.grid.size:
            raise DataError(f"field has {v.shape[0]} values but grid has {self.grid.size} points")
        bad = np.flatnonzero(~np.isfinite(v))
        if bad.size:
            raise DataError(f"non-finite value at grid point {int(bad[0])}: {self.grid.points[bad[0]].tolist()}")
        object.__setattr__(self, "values", _frozen(v))

    def __eq__(self, other):
        if not isinstance(other, FieldSample):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.values, other.values)


@dataclass(frozen=True, eq=False)
class OperatorDataset:
    input_grid: CollocationGrid
    output_grid: CollocationGrid
    inputs: np.ndarray
    outputs: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        u = np.asarray(self.inputs, dtype=np.float64)
        v = np.asarray(self.outputs, dtype=np.float64)
        if u.ndim != 2 or v.ndim != 2:
            raise DataError("inputs and outputs must be 2-D (samples, points)")
        if u.shape[0] != v.shape[0] or u.shape[0] < 1:
            raise DataError(f"inputs ({u.shape[0]}) and outputs ({v.shape[0]}) must have equal count >= 1")
        if u.shape[1] != self.input_grid.size:
            raise DataError(f"input length {u.shape[1]} does not match input grid size {self.input_grid.size}")
        if v.shape[1] != self.output_grid.size:
            raise DataError(f"output length {v.shape[1]} does not match output grid size {self.output_grid.size}")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise DataError("dataset contains non-finite values")
        object.__setattr__(self, "inputs", _frozen(u))
        object.__setattr__(self, "outputs", _frozen(v))
        object.__setattr__(self, "meta", _plain(self.meta))

    def __len__(self) -> int:
        return self.inputs.shape[0]

    def subset(self, idx) -> "OperatorDataset":
        return OperatorDataset(self.input_grid, self.output_grid, self.inputs[idx], self.outputs[idx], self.meta)

    def input_sample(self, i: int) -> FieldSample:
        return FieldSample(self.input_grid, self.inputs[i])

    def output_sample(self, i: int) -> FieldSample:
        return FieldSample(self.output_grid, self.outputs[i])

    def __eq__(self, other):
        if not isinstance(other, OperatorDataset):
            return NotImplemented
        return (
            self.input_grid == other.input_grid
            and self.output_grid == other.output_grid
            and np.array_equal(self.inputs, other.inputs)
            and np.array_equal(self.outputs, other.outputs)
            and self.meta == other.meta
        )


@dataclass(frozen=True)
class RFConfig:
    """Everything needed to regenerate a feature ensemble: law, scale, size, seed."""

    distribution: str = "cauchy"
    gamma: float = 1.0
    count: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.distribution not in DISTRIBUTIONS:
            raise ParameterError(f"unknown distribution {self.distribution!r}; expected one of {DISTRIBUTIONS}")
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ParameterError(f"gamma must be positive and finite, got {self.gamma}")
        if int(self.count) < 1:
            raise ParameterError(f"feature count must be >= 1, got {self.count}")
        object.__setattr__(self, "count", int(self.count))
        object.__setattr__(self, "seed", int(self.seed) % 2**64)
        object.__setattr__(self, "gamma", float(self.gamma))

    def as_dict(self) -> dict:
        return {"distribution": self.distribution, "gamma": self.gamma, "count": self.count, "seed": self.seed}


@dataclass(frozen=True, eq=False)
class FeatureEnsemble:
    frequencies: np.ndarray
    distribution: str
    gamma: float
    seed: int

    def __post_init__(self):
        w = np.asarray(self.frequencies, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
            raise DataError(f"frequencies must be a (count, dim) array, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise DataError("frequencies must be finite")
        object.__setattr__(self, "frequencies", _frozen(w))

    @property
    def count(self) -> int:
        return self.frequencies.shape[0]

    @property
    def dim(self) -> int:
        return self.frequencies.shape[1]

    @property
    def config(self) -> RFConfig:
        return RFConfig(self.distribution, self.gamma, self.count, self.seed)

    def __eq__(self, other):
        if not isinstance(other, FeatureEnsemble):
            return NotImplemented
        return (
            self.distribution == other.distribution
            and self.gamma == other.gamma
            and self.seed == other.seed
            and np.array_equal(self.frequencies, other.frequencies)
        )


@dataclass(frozen=True, eq=False)
class RandomFeatureInterpolant:
    ensemble: FeatureEnsemble
    coefficients: np.ndarray
    train_grid: Optional[CollocationGrid] = None

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=np.complex128).ravel()
        if c.shape[0] != self.ensemble.count:
            raise DataError(f"{c.shape[0]} coefficients for an ensemble of {self.ensemble.count} features")
        object.__setattr__(self, "coefficients", _frozen(c, np.complex128))

    def __call__(self, x) -> np.ndarray:
        from .features import evaluate_many

        return evaluate_many(self, x)


@dataclass(frozen=True, eq=False)
class OperatorModel:
    """Composed estimator: feature coefficients for every output point plus the
    configuration of the output-side recovery map."""

    input_ensemble: FeatureEnsemble
    coeff_matrix: np.ndarray
    input_grid: CollocationGrid
    output_grid: CollocationGrid
    recovery_config: Optional[RFConfig] = None
    jitter_used: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        C = np.asarray(self.coeff_matrix, dtype=np.complex128)
        if C.ndim != 2:
            raise DataError("coeff_matrix must be 2-D (features, output points)")
        if C.shape[0] != self.input_ensemble.count:
            raise DataError(f"coeff_matrix has {C.shape[0]} rows, ensemble has {self.input_ensemble.count}")
        if C.shape[1] != self.output_grid.size:
            raise DataError(f"coeff_matrix has {C.shape[1]} columns, output grid has {self.output_grid.size} points")
        if self.input_ensemble.dim != self.input_grid.size:
            raise DataError("input ensemble dimension must equal the input grid size")
        object.__setattr__(self, "coeff_matrix", _frozen(C, np.complex128))
        object.__setattr__(self, "meta", _plain(self.meta))

    def __eq__(self, other):
        if not isinstance(other, OperatorModel):
            return NotImplemented
        return (
            self.input_ensemble == other.input_ensemble
            and np.array_equal(self.coeff_matrix, other.coeff_matrix)
            and self.input_grid == other.input_grid
            and self.output_grid == other.output_grid
            and self.recovery_config == other.recovery_config
            and self.jitter_used == other.jitter_used
            and self.meta == other.meta
        )


@dataclass(frozen=True)
class KernelSpec:
    kind: str
    gamma: Optional[float] = None
    sigma: Optional[float] = None
    nu: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ParameterError(f"unknown kernel {self.kind!r}; expected one of {KERNEL_KINDS}")
        required = ("sigma", "nu") if self.kind == "matern" else ("gamma",)
        for name in required:
            val = getattr(self, name)
            if val is None or not (math.isfinite(val) and val > 0):
                raise ParameterError(f"{self.kind} kernel needs a positive {name}, got {val}")


def sampling_apply(grid: CollocationGrid, fn: Callable) -> FieldSample:
    """Evaluate ``fn`` at every grid point (in grid order).

    ``fn`` receives one point as a 1-D array of length ``grid.dim``.
    """
    vals = np.empty(grid.size)
    for j, p in enumerate(grid.points):
        v = float(fn(p))
        if not math.isfinite(v):
            raise DataError(f"field is not finite at grid point {j} {p.tolist()}: {v}")
        vals[j] = v
    return FieldSample(grid, vals)


def min_separation(grid: CollocationGrid) -> float:
    """Smallest pairwise Euclidean distance between grid points."""
    pts = grid.points
    if pts.shape[0] < 2:
        raise DataError("separation needs at least two points")
    dist, _ = cKDTree(pts).query(pts, k=2)
    return float(dist[:, 1].min())
