"""Binary and CSV persistence for datasets and models.

Binary layout (all little-endian)::

    b"RFOL"            4 bytes magic
    u32                format version
    u64                byte length L of the metadata block
    L bytes            UTF-8 JSON metadata
    float64 arrays     raw, C order, in the order listed in metadata["arrays"]

Datasets store: input grid points (n, d_u), output grid points (m, d_v),
inputs (M, n), outputs (M, m). Models store: input grid points, output grid
points, frequencies (N, n), coefficients (N, m, 2) with real and imaginary
parts interleaved.

Writes go to a temporary file in the target directory followed by an atomic
rename, so readers never observe a partially written artifact.
"""

from __future__ import annotations

import csv
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .core import (
    CollocationGrid,
    DataError,
    FeatureEnsemble,
    OperatorDataset,
    OperatorModel,
    RFConfig,
)

MAGIC = b"RFOL"
VERSION = 1
_HEADER = struct.Struct("<4sIQ")


class FormatError(DataError):
    """Malformed or truncated file; ``offset`` is the byte position of the problem."""

    def __init__(self, msg: str, offset: int):
        super().__init__(f"{msg} (at byte {offset})")
        self.offset = offset


def _grid_meta(g: CollocationGrid) -> dict:
    return {
        "count": g.size,
        "dim": g.dim,
        "domain_lo": g.domain_lo.tolist(),
        "domain_hi": g.domain_hi.tolist(),
        "name": g.name,
    }


def _grid_from(meta: dict, points: np.ndarray) -> CollocationGrid:
    return CollocationGrid(points, meta["domain_lo"], meta["domain_hi"], name=meta.get("name", ""))


def _write(path, meta: dict, arrays: list[tuple[str, np.ndarray]]):
    meta = dict(meta)
    meta["arrays"] = [{"name": n, "shape": list(a.shape)} for n, a in arrays]
    blob = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(_HEADER.pack(MAGIC, VERSION, len(blob)))
            f.write(blob)
            for _, a in arrays:
                f.write(np.ascontiguousarray(a, dtype="<f8").tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read(path, kind: str) -> tuple[dict, dict]:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError("file shorter than header", len(raw))
    magic, version, mlen = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", 0)
    if version != VERSION:
        raise FormatError(f"unsupported format version {version} (expected {VERSION})", 4)
    off = _HEADER.size
    if off + mlen > len(raw):
        raise FormatError("metadata block truncated", len(raw))
    try:
        meta = json.loads(raw[off : off + mlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"metadata is not valid JSON: {e}", off) from None
    if meta.get("kind") != kind:
        raise FormatError(f"expected a {kind} file, found {meta.get('kind')!r}", off)
    off += mlen
    arrays = {}
    for spec in meta.get("arrays", []):
        shape = tuple(int(s) for s in spec["shape"])
        nbytes = 8 * int(np.prod(shape, dtype=np.int64))
        if off + nbytes > len(raw):
            raise FormatError(f"array {spec['name']!r} truncated", len(raw))
        a = np.frombuffer(raw, dtype="<f8", count=nbytes // 8, offset=off).reshape(shape).astype(np.float64)
        if not np.all(np.isfinite(a)):
            bad = int(np.flatnonzero(~np.isfinite(a.ravel()))[0])
            raise FormatError(f"non-finite value in array {spec['name']!r}", off + 8 * bad)
        arrays[spec["name"]] = a
        off += nbytes
    if off != len(raw):
        raise FormatError(f"{len(raw) - off} trailing bytes", off)
    return meta, arrays


def write_dataset(path, data: OperatorDataset):
    meta = {
        "kind": "dataset",
        "input_grid": _grid_meta(data.input_grid),
        "output_grid": _grid_meta(data.output_grid),
        "samples": len(data),
        "meta": data.meta,
    }
    _write(
        path,
        meta,
        [
            ("input_points", data.input_grid.points),
            ("output_points", data.output_grid.points),
            ("inputs", data.inputs),
            ("outputs", data.outputs),
        ],
    )


def read_dataset(path) -> OperatorDataset:
    meta, arr = _read(path, "dataset")
    try:
        ig = _grid_from(meta["input_grid"], arr["input_points"])
        og = _grid_from(meta["output_grid"], arr["output_points"])
        return OperatorDataset(ig, og, arr["inputs"], arr["outputs"], meta.get("meta", {}))
    except KeyError as e:
        raise FormatError(f"missing field {e}", _HEADER.size) from None


def write_model(path, model: OperatorModel):
    ens = model.input_ensemble
    C = model.coeff_matrix
    meta = {
        "kind": "model",
        "ensemble": {"distribution": ens.distribution, "gamma": ens.gamma, "seed": ens.seed, "count": ens.count, "dim": ens.dim},
        "recovery": None if model.recovery_config is None else model.recovery_config.as_dict(),
        "input_grid": _grid_meta(model.input_grid),
        "output_grid": _grid_meta(model.output_grid),
        "jitter_used": model.jitter_used,
        "meta": model.meta,
    }
    _write(
        path,
        meta,
        [
            ("input_points", model.input_grid.points),
            ("output_points", model.output_grid.points),
            ("frequencies", ens.frequencies),
            ("coefficients", np.stack([C.real, C.imag], axis=-1)),
        ],
    )


def read_model(path) -> OperatorModel:
    meta, arr = _read(path, "model")
    try:
        e = meta["ensemble"]
        ens = FeatureEnsemble(arr["frequencies"], e["distribution"], float(e["gamma"]), int(e["seed"]))
        ri = arr["coefficients"]
        rec = meta.get("recovery")
        return OperatorModel(
            input_ensemble=ens,
            coeff_matrix=ri[..., 0] + 1j * ri[..., 1],
            input_grid=_grid_from(meta["input_grid"], arr["input_points"]),
            output_grid=_grid_from(meta["output_grid"], arr["output_points"]),
            recovery_config=None if rec is None else RFConfig(**rec),
            jitter_used=float(meta["jitter_used"]),
            meta=meta.get("meta", {}),
        )
    except KeyError as e:
        raise FormatError(f"missing field {e}", _HEADER.size) from None


# CSV interop: one row per sample (input values then output values) plus two
# sidecar grid files <stem>.input_grid.csv / <stem>.output_grid.csv holding one
# point per row and optional "# lo:" / "# hi:" comment lines for the domain.


def _sidecars(path) -> tuple[Path, Path]:
    p = Path(path)
    stem = p.with_suffix("")
    return Path(f"{stem}.input_grid.csv"), Path(f"{stem}.output_grid.csv")


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_grid_csv(path: Path, g: CollocationGrid):
    with open(path, "w", newline="") as f:
        f.write("# lo: " + " ".join(_fmt(v) for v in g.domain_lo) + "\n")
        f.write("# hi: " + " ".join(_fmt(v) for v in g.domain_hi) + "\n")
        w = csv.writer(f)
        w.writerow([f"x{i}" for i in range(g.dim)])
        for p in g.points:
            w.writerow([_fmt(v) for v in p])


def _read_grid_csv(path: Path) -> CollocationGrid:
    lo = hi = None
    rows = []
    with open(path, newline="") as f:
        lines = f.read().splitlines()
    body = []
    for line in lines:
        s = line.strip()
        if s.startswith("# lo:"):
            lo = [float(t) for t in s[5:].split()]
        elif s.startswith("# hi:"):
            hi = [float(t) for t in s[5:].split()]
        elif s and not s.startswith("#"):
            body.append(s)
    reader = csv.reader(body)
    header = next(reader, None)
    if header is None:
        raise DataError(f"grid file {path} is empty")
    for r in reader:
        try:
            rows.append([float(t) for t in r])
        except ValueError:
            raise DataError(f"non-numeric grid entry in {path}: {r}") from None
    pts = np.array(rows, dtype=np.float64).reshape(len(rows), len(header))
    if lo is None:
        lo = pts.min(axis=0)
    if hi is None:
        hi = pts.max(axis=0)
    return CollocationGrid(pts, lo, hi)


def write_dataset_csv(path, data: OperatorDataset):
    gi, go = _sidecars(path)
    _write_grid_csv(gi, data.input_grid)
    _write_grid_csv(go, data.output_grid)
    n, m = data.input_grid.size, data.output_grid.size
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow([f"u{j}" for j in range(n)] + [f"v{j}" for j in range(m)])
        for u, v in zip(data.inputs, data.outputs):
            w.writerow([_fmt(x) for x in u] + [_fmt(x) for x in v])


def read_dataset_csv(path, input_grid: CollocationGrid | None = None, output_grid: CollocationGrid | None = None) -> OperatorDataset:
    gi, go = _sidecars(path)
    ig = input_grid if input_grid is not None else _read_grid_csv(gi)
    og = output_grid if output_grid is not None else _read_grid_csv(go)
    with open(path, newline="") as f:
        reader = csv.reader(line for line in f if line.strip() and not line.startswith("#"))
        header = next(reader, None)
        rows = []
        for k, r in enumerate(reader, start=2):
            try:
                rows.append([float(t) for t in r])
            except ValueError:
                raise DataError(f"non-numeric value on line {k} of {path}") from None
    n, m = ig.size, og.size
    if header is None or len(header) != n + m:
        raise DataError(f"CSV header has {0 if header is None else len(header)} columns, expected {n + m}")
    if any(len(r) != n + m for r in rows):
        raise DataError("CSV rows must all have input+output columns")
    A = np.array(rows, dtype=np.float64).reshape(len(rows), n + m)
    return OperatorDataset(ig, og, A[:, :n], A[:, n:])
