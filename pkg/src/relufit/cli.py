"""Command-line entry points.

Subcommands: sweep, trial, lambda, lrfind, report, selftest.  Exit code
0 on success, 1 on an unreadable or invalid config, 2 on bad usage
(argparse's own convention).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import backend
from .config import load_sweep_config, resolve_out_dir, resolve_parallelism
from .errors import ConfigError
from .experiment import (
    N_MC,
    RESULTS_NAME,
    SweepConfig,
    cells_from_rows,
    n_eps_from_cells,
    read_results,
    run_sweep,
    run_trial,
    trial_seed,
)
from .conditioning import lambda_sweep, samples_to_csv, summary_payload
from .optim import dump_trace, lr_find
from .plotting import PlotSpec, fit_reference, render_loglog
from .rng import RandomSource
from .student import init_student
from .teacher import TeacherConfig, generate_dataset, sample_teacher
from .trainer import split_dataset
from .width_search import WidthScheme


def _progress(message: str) -> None:
    print(message, flush=True)


def _cmd_sweep(args) -> int:
    cfg = load_sweep_config(args.config)
    if args.seed is not None:
        cfg.master_seed = args.seed
    if args.trials is not None:
        cfg.trials = args.trials
    if args.parallelism is not None:
        cfg.parallelism = args.parallelism
    cfg.out_dir = resolve_out_dir(args.out, cfg.out_dir)
    cfg.parallelism = resolve_parallelism(cfg.parallelism)
    print(f"sweep -> {cfg.out_dir} (backend {backend.BACKEND}, "
          f"parallelism {cfg.parallelism})", flush=True)
    result = run_sweep(cfg, progress=_progress)
    for entry in result.n_eps:
        reached = entry.n_eps if entry.n_eps is not None else f"not reached by N={entry.n_cap}"
        print(f"N_eps d={entry.d} M={entry.M} sigma={entry.sigma} "
              f"eps={entry.epsilon}: {reached}", flush=True)
    return 0


def _cmd_trial(args) -> int:
    config = TeacherConfig(args.d, args.m, args.sigma)
    scheme = WidthScheme(args.scheme, args.width)
    seed = args.seed if args.seed is not None else 0
    seed = trial_seed(seed, config, args.n, args.trial)
    result = run_trial(config, args.n, args.depth, scheme, seed, trial=args.trial)
    print(f"d={result.d} M={result.M} sigma={result.sigma} N={result.N} "
          f"depth={result.depth} scheme={result.scheme} trial={result.trial}")
    print(f"error={result.error!r} queries={result.queries} "
          f"width={result.width} flag={result.flag or '-'}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        from .experiment import append_results
        append_results(os.path.join(args.out, RESULTS_NAME), [result])
        print(f"appended to {os.path.join(args.out, RESULTS_NAME)}")
    return 0


def _cmd_lambda(args) -> int:
    m_values = [int(v) for v in args.m_values.split(",") if v]
    out_dir = resolve_out_dir(args.out, None)
    os.makedirs(out_dir, exist_ok=True)
    seed = args.seed if args.seed is not None else 0
    trials = args.trials if args.trials is not None else 200
    result = lambda_sweep(m_values, trials, seed)
    csv_path = os.path.join(out_dir, "lambda.csv")
    samples_to_csv(result, csv_path)
    with open(os.path.join(out_dir, "lambda_summary.json"), "w") as fh:
        json.dump(summary_payload(result), fh, indent=1)
    for s in result.summaries:
        print(f"M={s.M} d={s.d} median log10(lambda)={s.median:.3f} "
              f"[{s.q05:.3f}, {s.q95:.3f}] underflows={s.underflows}")
    spec = PlotSpec(
        xs=[s.M for s in result.summaries],
        ys=[10.0 ** s.median for s in result.summaries],
        labels=[f"M={s.M}" for s in result.summaries],
        x_label="M (d = 2M)",
        y_label="median lambda",
        title="Spectral spread of product weights",
        equal_aspect=False,
        x_log=False,
        y_log=True,
        y_err=[(10.0 ** s.q05, 10.0 ** s.q95) for s in result.summaries],
    )
    render_loglog(spec, os.path.join(out_dir, "lambda.svg"))
    print(f"wrote {csv_path}, lambda_summary.json, lambda.svg")
    return 0


def _cmd_lrfind(args) -> int:
    config = TeacherConfig(args.d, args.m, args.sigma)
    seed = args.seed if args.seed is not None else 0
    rng = RandomSource(seed)
    teacher = sample_teacher(config, rng.child(0))
    data = generate_dataset(teacher, args.n, rng.child(1))
    train_set, _ = split_dataset(data, rng.child(2))
    width = args.width if args.width is not None else 4 * args.m
    net = init_student(args.d, args.depth, width, rng.child(3))
    result = lr_find(net, train_set.xs, train_set.ys, rng.child(4))
    print(f"steps={result.steps} queries={result.queries} fallback={result.fallback}")
    print(f"steep={result.steep!r} minimum={result.minimum!r} valley={result.valley!r}")
    print(f"chosen={result.chosen!r}")
    if args.trace:
        dump_trace(result, args.trace)
        print(f"wrote {args.trace}")
    return 0


def _fig_samples(rows, eps_values, out_dir):
    cells = cells_from_rows(rows)
    xs, ys, labels = [], [], []
    for eps in eps_values:
        for (d, m, sigma), n_eps in sorted(n_eps_from_cells(cells, eps).items()):
            xs.append(d * m)
            ys.append(eps * n_eps)
            labels.append(f"d={d} M={m} sigma={sigma} eps={eps}")
    if len(xs) < 2:
        raise ConfigError("need at least two resolved cells to plot samples")
    fit = fit_reference(xs, ys)
    spec = PlotSpec(
        xs=xs, ys=ys, labels=labels,
        ref_slope=1.0, ref_intercept=math.log10(fit.unit_coeff),
        x_label="d * M", y_label="eps * N_eps",
        title=f"Sample complexity (unit fit c={fit.unit_coeff:.2f}, "
              f"free slope {fit.slope:.2f})",
    )
    path = os.path.join(out_dir, "samples.svg")
    render_loglog(spec, path)
    print(f"free fit: slope={fit.slope:.3f} intercept={fit.intercept:.3f}; "
          f"unit-slope coefficient c={fit.unit_coeff:.3f}")
    print(f"wrote {path}")


def _fig_queries(rows, out_dir):
    cells = cells_from_rows(rows)
    xs = [c.N for c in cells]
    ys = [c.mean_queries for c in cells]
    labels = [f"d={c.d} M={c.M} sigma={c.sigma} N={c.N}" for c in cells]
    if len(xs) < 2:
        raise ConfigError("need at least two cells to plot queries")
    fit = fit_reference(xs, ys)
    spec = PlotSpec(
        xs=xs, ys=ys, labels=labels,
        ref_slope=1.0, ref_intercept=math.log10(fit.unit_coeff),
        x_label="N", y_label="mean queries",
        title=f"Query count vs sample size (unit fit c={fit.unit_coeff:.0f}, "
              f"free slope {fit.slope:.2f})",
    )
    path = os.path.join(out_dir, "queries.svg")
    render_loglog(spec, path)
    print(f"free fit: slope={fit.slope:.3f}; unit-slope coefficient c={fit.unit_coeff:.1f}")
    print(f"wrote {path}")


def _fig_samples_by(rows, eps: float, by: str, out_dir):
    cells = cells_from_rows(rows)
    n_eps = n_eps_from_cells(cells, eps)
    groups = {}
    for (d, m, sigma), value in sorted(n_eps.items()):
        key = d if by == "d" else m
        x = m if by == "d" else d
        groups.setdefault(key, []).append((x, value))
    for key, points in groups.items():
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        spec = PlotSpec(
            xs=xs, ys=ys,
            labels=[f"{'M' if by == 'd' else 'd'}={x}" for x in xs],
            x_label="M" if by == "d" else "d",
            y_label=f"N_eps (eps={eps})",
            title=f"Sample complexity at {by}={key}",
            y_err=[(y / 2.0, y) for y in ys],
        )
        path = os.path.join(out_dir, f"samples_{by}{key}.svg")
        render_loglog(spec, path)
        print(f"wrote {path}")


def _cmd_report(args) -> int:
    rows = read_results(args.results)
    if not rows:
        raise ConfigError(f"no rows found in {args.results}")
    out_dir = resolve_out_dir(args.out, None)
    os.makedirs(out_dir, exist_ok=True)
    eps_values = [float(v) for v in args.eps.split(",") if v]
    if args.table:
        cells = cells_from_rows(rows)
        print("d,M,sigma,N,mean_error,mean_queries,trials")
        for c in cells:
            print(f"{c.d},{c.M},{c.sigma!r},{c.N},{c.mean_error!r},"
                  f"{c.mean_queries!r},{c.trials}")
        for eps in eps_values:
            for (d, m, sigma), value in sorted(n_eps_from_cells(cells, eps).items()):
                print(f"N_eps d={d} M={m} sigma={sigma} eps={eps}: {value}")
    if args.fig == "samples":
        _fig_samples(rows, eps_values, out_dir)
    elif args.fig == "queries":
        _fig_queries(rows, out_dir)
    elif args.fig == "samples-by-d":
        _fig_samples_by(rows, eps_values[0], "d", out_dir)
    elif args.fig == "samples-by-m":
        _fig_samples_by(rows, eps_values[0], "m", out_dir)
    return 0


def _cmd_selftest(args) -> int:
    from .selftest import run_selftest
    ok = run_selftest(quick=args.quick)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relufit",
        description="Measure how many samples and queries SGD needs to fit "
                    "shallow ReLU teacher networks.",
    )
    parser.add_argument("--seed", type=int, default=None, help="master seed override")
    parser.add_argument("--trials", type=int, default=None, help="trials per cell override")
    parser.add_argument("--out", type=str, default=None, help="output directory override")
    parser.add_argument("--parallelism", type=int, default=None,
                        help="worker processes (0 = all cores)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run a sweep from a config file")
    p.add_argument("--config", required=True, help="TOML sweep config")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("trial", help="run a single trial")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--m", "--M", dest="m", type=int, required=True)
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--n", "--N", dest="n", type=int, required=True)
    p.add_argument("--depth", type=int, default=1, choices=(1, 2, 3))
    p.add_argument("--scheme", default="tune", choices=("same", "four_m", "tune", "best"))
    p.add_argument("--width", type=int, default=None, help="width for scheme=best")
    p.add_argument("--trial", type=int, default=0, help="trial index for seeding")
    p.set_defaults(func=_cmd_trial)

    p = sub.add_parser("lambda", help="spectral-spread study of product weights")
    p.add_argument("--m-values", default="2,4,8,16,32")
    p.set_defaults(func=_cmd_lambda)

    p = sub.add_parser("lrfind", help="run the learning-rate range test once")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--m", "--M", dest="m", type=int, required=True)
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--n", "--N", dest="n", type=int, required=True)
    p.add_argument("--depth", type=int, default=1, choices=(1, 2, 3))
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--trace", type=str, default=None, help="write the trace CSV here")
    p.set_defaults(func=_cmd_lrfind)

    p = sub.add_parser("report", help="render figures/tables from a results file")
    p.add_argument("--results", required=True, help="path to results.csv")
    p.add_argument("--fig", default=None,
                   choices=("samples", "queries", "samples-by-d", "samples-by-m"))
    p.add_argument("--eps", default="1.0", help="comma-separated epsilon targets")
    p.add_argument("--table", action="store_true", help="print per-cell means and N_eps")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("selftest", help="run built-in correctness checks")
    p.add_argument("--quick", action="store_true", help="fewer random cases")
    p.set_defaults(func=_cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
