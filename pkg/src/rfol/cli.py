"""Command line front end.

Exit codes: 0 success, 2 parameter error, 3 data error, 4 numerical or
conditioning error. ``--threads`` (or RFOL_THREADS) caps worker threads.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time
from pathlib import Path

from . import io
from .core import CollocationGrid, DataError, KernelSpec, ParameterError, RFOLError, RFConfig
from .datagen import GENERATORS, generate
from .diagnostics import (
    DecayTask,
    concentration_check,
    decay_study,
    features_for_eta,
    gamma_for_eta,
    kernel_limit_check,
    relative_test_error,
)
from .kernels import train_kernel_operator
from .operator import predict_many, train_operator

VERIFY_COLUMNS = {
    "concentration": "trial,deviation,eta_bound,within",
    "decay": "N,median_error,median_seconds",
    "kernel-limit": "seed,sup_diff,tolerance,within",
}

COMPARE_COLUMNS = ["model", "N", "gamma", "relative_error", "train_seconds"]


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("RFOL_THREADS")
    return max(1, int(env)) if env else 1


def _emit_csv(rows, header, path):
    out = open(path, "w", newline="") if path else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(header)
        w.writerows(rows)
    finally:
        if path:
            out.close()


def cmd_gen(args):
    if args.problem not in GENERATORS:
        raise ParameterError(f"unknown problem {args.problem!r}; choose from {', '.join(sorted(GENERATORS))}")
    total = args.train + args.test
    if args.train < 1:
        raise ParameterError("--train must be >= 1")
    data = generate(args.problem, total, args.resolution, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    train_path = out / f"{args.problem}_train.rfol"
    io.write_dataset(train_path, data.subset(slice(0, args.train)))
    written = [train_path]
    if args.test > 0:
        test_path = out / f"{args.problem}_test.rfol"
        io.write_dataset(test_path, data.subset(slice(args.train, None)))
        written.append(test_path)
    print(
        f"{args.problem}: resolution={data.input_grid.size} train={args.train} test={args.test} seed={args.seed} "
        f"-> {', '.join(str(p) for p in written)}"
    )


def cmd_train(args):
    data = io.read_dataset(args.data)
    cfg = RFConfig(args.dist, args.gamma, args.N, args.seed)
    recovery = None
    if any(v is not None for v in (args.recovery_gamma, args.recovery_N, args.recovery_seed)):
        from .operator import default_recovery_config

        base = default_recovery_config(data.output_grid, args.dist, args.seed)
        recovery = RFConfig(
            args.dist,
            args.recovery_gamma if args.recovery_gamma is not None else base.gamma,
            args.recovery_N if args.recovery_N is not None else base.count,
            args.recovery_seed if args.recovery_seed is not None else base.seed,
        )
    t0 = time.perf_counter()
    model = train_operator(data, cfg, recovery, workers=_threads(args))
    dt = time.perf_counter() - t0
    io.write_model(args.out, model)
    print(f"trained {args.dist} N={args.N} gamma={args.gamma:g} on M={len(data)} in {dt:.3f} s -> {args.out}")


def _eval(model, data) -> float:
    if not model.input_grid.same_as(data.input_grid) or not model.output_grid.same_as(data.output_grid):
        raise DataError("test data grids do not match the model's grids")
    return relative_test_error(predict_many(model, data.inputs), data.outputs, data.output_grid.volume)


def cmd_eval(args):
    model = io.read_model(args.model)
    data = io.read_dataset(args.data)
    err = _eval(model, data)
    print(f"relative_test_error {err:.6e}")
    if args.csv:
        new = not Path(args.csv).exists()
        with open(args.csv, "a", newline="") as f:
            w = csv.writer(f)
            if new:
                w.writerow(["model", "data", "relative_error"])
            w.writerow([args.model, args.data, repr(err)])


def cmd_compare_kernel(args):
    train = io.read_dataset(args.train)
    test = io.read_dataset(args.test)
    workers = _threads(args)
    rows = []
    for name in [s.strip() for s in args.models.split(",") if s.strip()]:
        if name == "rbf":
            spec, N, gamma = KernelSpec("rbf", gamma=args.rbf_gamma), "", args.rbf_gamma
        elif name == "matern":
            spec, N, gamma = KernelSpec("matern", sigma=args.matern_sigma, nu=args.matern_nu), "", ""
        elif name == "laplace":
            spec, N, gamma = KernelSpec("laplace", gamma=args.laplace_gamma), "", args.laplace_gamma
        elif name in ("rf-cauchy", "rf-gaussian"):
            spec = None
            dist = name[3:]
            gamma = args.cauchy_gamma if dist == "cauchy" else args.gaussian_gamma
            N = args.N
        else:
            raise ParameterError(f"unknown model {name!r}")
        t0 = time.perf_counter()
        if spec is None:
            model = train_operator(train, RFConfig(dist, gamma, N, args.seed), workers=workers)
            dt = time.perf_counter() - t0
            err = _eval(model, test)
        else:
            kmodel = train_kernel_operator(train, spec)
            dt = time.perf_counter() - t0
            err = relative_test_error(kmodel.predict(test.inputs), test.outputs)
        rows.append([name, N, gamma, repr(err), f"{dt:.4f}"])
    _emit_csv(rows, COMPARE_COLUMNS, args.csv)


def cmd_verify(args):
    rows = []
    if args.suite == "concentration":
        grid = CollocationGrid.equispaced(args.m, 0.0, 1.0, centered=False)
        N = args.N or features_for_eta(args.eta, args.m, args.delta)
        gamma = args.gamma or (gamma_for_eta(grid, args.eta) if args.m > 1 else 1.0)
        res = concentration_check(
            grid, args.dist, gamma, N, args.trials, args.seed, delta=args.delta, eta=args.eta, workers=_threads(args)
        )
        for t, d in enumerate(res.deviations):
            rows.append([t, repr(float(d)), res.eta_bound, int(d <= res.eta_bound)])
        print(
            f"# m={args.m} N={N} gamma={gamma:.6g} within={res.fraction_within:.2f} p95={res.p95:.4f}",
            file=sys.stderr,
        )
    elif args.suite == "decay":
        Ns = [int(s) for s in args.N_list.split(",")]
        task = DecayTask(name=args.task, distribution=args.dist, gamma=args.gamma, train=args.train)
        res = decay_study(task, Ns, args.trials, args.seed)
        rows = [[n, repr(e), repr(s)] for n, e, s in res.rows()]
        print(f"# error_slope={res.error_slope:.4f} time_slope={res.time_slope:.4f}", file=sys.stderr)
    else:
        res = kernel_limit_check(m=args.m, gamma=args.gamma or 1.0, N=args.N or 200_000, seeds=range(args.trials))
        rows = [[s, repr(float(d)), res.tolerance, int(d <= res.tolerance)] for s, d in enumerate(res.sup_diffs)]
        print(f"# passed {res.passed}/{len(rows)}", file=sys.stderr)
    _emit_csv(rows, VERIFY_COLUMNS[args.suite].split(","), args.csv)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rfol", description="Random feature operator learning.")
    p.add_argument("--threads", type=int, default=None, help="worker thread cap (env RFOL_THREADS)")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a benchmark dataset")
    g.add_argument("problem", help=f"one of {', '.join(sorted(GENERATORS))}")
    g.add_argument("--train", type=int, default=1000)
    g.add_argument("--test", type=int, default=200)
    g.add_argument("--resolution", type=int, default=None)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default=".", help="output directory")
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", help="train a random feature operator model")
    t.add_argument("data")
    t.add_argument("--dist", choices=["cauchy", "gaussian"], default="cauchy")
    t.add_argument("--gamma", type=float, required=True)
    t.add_argument("--N", type=int, required=True)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--recovery-gamma", type=float, default=None)
    t.add_argument("--recovery-N", type=int, default=None)
    t.add_argument("--recovery-seed", type=int, default=None)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="relative test error of a model on a dataset")
    e.add_argument("model")
    e.add_argument("data")
    e.add_argument("--csv", default=None, help="append model,data,relative_error to this CSV")
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser(
        "compare-kernel",
        help="kernel baselines vs random features",
        description="CSV columns: " + ",".join(COMPARE_COLUMNS),
    )
    c.add_argument("train")
    c.add_argument("test")
    c.add_argument("--models", default="rbf,matern,rf-cauchy,rf-gaussian")
    c.add_argument("--rbf-gamma", type=float, default=0.5)
    c.add_argument("--laplace-gamma", type=float, default=0.5)
    c.add_argument("--matern-nu", type=float, default=1.5)
    c.add_argument("--matern-sigma", type=float, default=1.0)
    c.add_argument("--cauchy-gamma", type=float, default=1e-5)
    c.add_argument("--gaussian-gamma", type=float, default=1e-5)
    c.add_argument("--N", type=int, default=5000)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--csv", default=None)
    c.set_defaults(func=cmd_compare_kernel)

    v = sub.add_parser(
        "verify",
        help="empirical checks: concentration, decay, kernel-limit",
        description="CSV columns: "
        + "; ".join(f"{k}: {cols}" for k, cols in VERIFY_COLUMNS.items()),
    )
    v.add_argument("suite", choices=sorted(VERIFY_COLUMNS))
    v.add_argument("--m", type=int, default=50)
    v.add_argument("--eta", type=float, default=0.25)
    v.add_argument("--delta", type=float, default=0.05)
    v.add_argument("--N", type=int, default=None)
    v.add_argument("--gamma", type=float, default=None)
    v.add_argument("--dist", choices=["cauchy", "gaussian"], default="cauchy")
    v.add_argument("--trials", type=int, default=None)
    v.add_argument("--N-list", default="250,500,1000,2000,4000")
    v.add_argument("--train", type=int, default=200, help="decay: training pairs")
    v.add_argument("--task", default="advection1", choices=["advection1", "rkhs", "representable"])
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--csv", default=None)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    if getattr(args, "suite", None) and args.trials is None:
        args.trials = {"concentration": 100, "decay": 10, "kernel-limit": 10}[args.suite]
    try:
        args.func(args)
    except RFOLError as e:
        print(f"error: {e}", file=sys.stderr)
        if isinstance(e, ParameterError):
            parser.print_usage(sys.stderr)
        return e.exit_code
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
