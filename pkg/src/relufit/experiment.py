"""Sweep machinery: trials, N-doubling cells, persistence, resumption.

A trial fixes (d, M, sigma, N, trial index): sample a teacher, draw N
labeled points, pick and train a student, then Monte Carlo its error
E[(student - teacher)^2] / (2 sigma^2) on fresh inputs.  Sweep cells run
trials at doubling N until every epsilon target's mean error is reached
or the cap stops them.  Trial seeds are content-addressed hashes, so any
row can be recomputed in isolation and reruns are byte-identical.
"""

from __future__ import annotations

import json
import math
import multiprocessing
import os
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import backend
from .rng import RandomSource, derive_seed
from .student import StudentNet
from .teacher import TeacherConfig, TeacherNet, sample_teacher, generate_dataset, teacher_predict
from .width_search import WidthScheme, select_and_train

N_MC = 8192
RESULTS_NAME = "results.csv"
EVALS_NAME = "width_evals.csv"
SUMMARY_NAME = "summary.json"

RESULTS_HEADER = "d,M,sigma,depth,scheme,N,trial,seed,error,queries,width,flag"
EVALS_HEADER = "d,M,sigma,depth,scheme,N,trial,width,val_loss"


def estimate_error(net: StudentNet, teacher: TeacherNet, sigma: float,
                   n_mc: int, rng: RandomSource) -> float:
    """Noise-normalized squared error on n_mc fresh inputs.

    Inputs are drawn as one row-major block, so doubling n_mc with the
    same rng seed extends the sample rather than replacing it.
    """
    if sigma <= 0:
        raise ValueError("the normalized error is undefined at sigma = 0")
    xs = rng.normal_matrix(n_mc, teacher.config.d)
    pred = backend.kernels.mlp_forward(net.weights, net.biases, xs)
    target = teacher_predict(teacher, xs)
    diff = pred - target
    return float(np.mean(diff * diff)) / (2.0 * sigma * sigma)


@dataclass
class TrialResult:
    d: int
    M: int
    sigma: float
    depth: int
    scheme: str
    N: int
    trial: int
    seed: int
    error: float
    queries: int
    width: int
    flag: str = ""
    evaluations: list = field(default_factory=list)  # (width, val_loss), not persisted in results.csv


def trial_seed(master_seed: int, config: TeacherConfig, n: int, trial: int) -> int:
    """Per-trial seed from (master, d, M, sigma, N, trial).

    Depth and scheme are deliberately left out: width-scheme ablations
    then compare schemes on identical teachers and datasets.
    """
    return derive_seed(master_seed, "trial", config.d, config.M, config.sigma, n, trial)


def run_trial(config: TeacherConfig, n: int, depth: int, scheme: WidthScheme,
              seed: int, trial: int = 0, n_mc: int = N_MC) -> TrialResult:
    """One full trial; everything below is a pure function of the seed."""
    rng = RandomSource(seed)
    teacher = sample_teacher(config, rng.child(0))
    data = generate_dataset(teacher, n, rng.child(1))
    outcome = select_and_train(data, depth, scheme, rng.child(2), config.M)
    if outcome.flags:
        error = math.inf
    else:
        error = estimate_error(
            outcome.best_report.best_net, teacher, config.sigma, n_mc, rng.child(3)
        )
    return TrialResult(
        d=config.d, M=config.M, sigma=config.sigma, depth=depth,
        scheme=scheme.kind, N=n, trial=trial, seed=seed, error=error,
        queries=outcome.total_queries, width=outcome.best_width,
        flag="+".join(outcome.flags), evaluations=list(outcome.evaluations),
    )


# --- results persistence ---------------------------------------------------


def format_row(r: TrialResult) -> str:
    return (
        f"{r.d},{r.M},{r.sigma!r},{r.depth},{r.scheme},{r.N},{r.trial},"
        f"{r.seed},{r.error!r},{r.queries},{r.width},{r.flag}"
    )


def parse_row(line: str) -> TrialResult:
    parts = line.rstrip("\n").split(",")
    if len(parts) != 12:
        raise ValueError(f"malformed results row: {line!r}")
    return TrialResult(
        d=int(parts[0]), M=int(parts[1]), sigma=float(parts[2]),
        depth=int(parts[3]), scheme=parts[4], N=int(parts[5]),
        trial=int(parts[6]), seed=int(parts[7]), error=float(parts[8]),
        queries=int(parts[9]), width=int(parts[10]), flag=parts[11],
    )


def result_key(r: TrialResult):
    return (r.d, r.M, r.sigma, r.depth, r.scheme, r.N, r.trial)


def read_results(path: str) -> list:
    if not os.path.exists(path):
        return []
    rows = []
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header != RESULTS_HEADER:
            raise ValueError(f"unexpected results header in {path}: {header!r}")
        for line in fh:
            if line.strip():
                rows.append(parse_row(line))
    return rows


def append_results(path: str, rows, evals_path: str | None = None) -> None:
    fresh = not os.path.exists(path)
    with open(path, "a") as fh:
        if fresh:
            fh.write(RESULTS_HEADER + "\n")
        for r in rows:
            fh.write(format_row(r) + "\n")
    if evals_path is not None:
        fresh = not os.path.exists(evals_path)
        with open(evals_path, "a") as fh:
            if fresh:
                fh.write(EVALS_HEADER + "\n")
            for r in rows:
                for w, val in r.evaluations:
                    fh.write(
                        f"{r.d},{r.M},{r.sigma!r},{r.depth},{r.scheme},"
                        f"{r.N},{r.trial},{w},{val!r}\n"
                    )


# --- sweep ------------------------------------------------------------------


@dataclass
class SweepConfig:
    d_list: list
    m_list: list
    sigma_list: list
    depth: int = 1
    scheme: str = "tune"
    eps_targets: list = field(default_factory=lambda: [1.0])
    trials: int = 32
    n_start: int = 16
    n_cap: int = 2 ** 20
    master_seed: int = 0
    parallelism: int = 1
    out_dir: str = "results"
    n_mc: int = N_MC


@dataclass
class CellStats:
    d: int
    M: int
    sigma: float
    N: int
    mean_error: float
    mean_queries: float
    trials: int


@dataclass
class NEpsEntry:
    d: int
    M: int
    sigma: float
    epsilon: float
    n_eps: int | None  # None when the cap was hit before reaching epsilon
    n_cap: int


@dataclass
class SweepResult:
    cells: list
    n_eps: list
    rows: list


def _trial_task(args):
    config, n, depth, scheme_kind, scheme_width, seed, trial, n_mc = args
    scheme = WidthScheme(scheme_kind, scheme_width)
    return run_trial(config, n, depth, scheme, seed, trial=trial, n_mc=n_mc)


def _worker_init():
    try:
        from threadpoolctl import threadpool_limits
        threadpool_limits(1)
    except ImportError:
        pass


def _compute_trials(tasks, parallelism: int):
    if parallelism < 1 or len(tasks) <= 1:
        parallelism = max(parallelism, 1)
    workers = min(parallelism, len(tasks))
    if workers <= 1:
        return [_trial_task(t) for t in tasks]
    ctx = multiprocessing.get_context("fork")
    with ctx.Pool(workers, initializer=_worker_init) as pool:
        return pool.map(_trial_task, tasks)


def ensure_cell(config: TeacherConfig, n: int, depth: int, scheme: WidthScheme,
                trials: int, master_seed: int, existing: dict, parallelism: int,
                results_path: str, evals_path: str | None, n_mc: int = N_MC,
                progress=None) -> list:
    """All trial rows for one (config, N) cell, computing only what's missing.

    New rows are appended to the results file in trial order, so a fresh
    run and a resumed run leave identical bytes behind.
    """
    rows = []
    tasks = []
    for trial in range(trials):
        seed = trial_seed(master_seed, config, n, trial)
        key = (config.d, config.M, config.sigma, depth, scheme.kind, n, trial)
        if key in existing:
            rows.append(existing[key])
        else:
            rows.append(None)
            tasks.append((config, n, depth, scheme.kind, scheme.width, seed, trial, n_mc))
    if tasks:
        computed = _compute_trials(tasks, parallelism)
        fresh = []
        it = iter(computed)
        for i, r in enumerate(rows):
            if r is None:
                rows[i] = next(it)
                fresh.append(rows[i])
        append_results(results_path, fresh, evals_path)
        for r in fresh:
            existing[result_key(r)] = r
        if progress is not None:
            progress(
                f"  cell d={config.d} M={config.M} sigma={config.sigma} N={n}: "
                f"ran {len(fresh)} trial(s), mean error "
                f"{float(np.mean([r.error for r in rows])):.4g}"
            )
    return rows


def _cell_stats(config: TeacherConfig, n: int, rows) -> CellStats:
    errors = [r.error for r in rows]
    queries = [r.queries for r in rows]
    return CellStats(
        d=config.d, M=config.M, sigma=config.sigma, N=n,
        mean_error=float(np.mean(errors)), mean_queries=float(np.mean(queries)),
        trials=len(rows),
    )


def summary_payload(cells, n_eps) -> dict:
    return {
        "cells": [
            {
                "d": c.d, "M": c.M, "sigma": c.sigma, "N": c.N,
                "mean_error": c.mean_error, "mean_queries": c.mean_queries,
                "trials": c.trials,
            }
            for c in cells
        ],
        "n_eps": [
            {
                "d": e.d, "M": e.M, "sigma": e.sigma, "epsilon": e.epsilon,
                "N_eps": e.n_eps, "n_cap": e.n_cap,
            }
            for e in n_eps
        ],
    }


def run_sweep(cfg: SweepConfig, progress=None) -> SweepResult:
    """Full sweep with incremental persistence and exact resumption.

    For each (d, M, sigma), N doubles from n_start until the mean error
    over the cell's trials is at or below every epsilon target, or N
    would pass n_cap.  Completed (gamma, N, trial) triples found in the
    results file are reused, never recomputed.
    """
    if cfg.scheme == "best":
        raise ValueError("sweeps take scheme same/four_m/tune; 'best' comes from run_width_ablation")
    os.makedirs(cfg.out_dir, exist_ok=True)
    results_path = os.path.join(cfg.out_dir, RESULTS_NAME)
    evals_path = os.path.join(cfg.out_dir, EVALS_NAME)
    summary_path = os.path.join(cfg.out_dir, SUMMARY_NAME)

    existing = {result_key(r): r for r in read_results(results_path)}
    scheme = WidthScheme(cfg.scheme)
    target = min(cfg.eps_targets)

    cells = []
    n_eps = []
    all_rows = []
    for d, m, sigma in product(cfg.d_list, cfg.m_list, cfg.sigma_list):
        config = TeacherConfig(d, m, sigma)
        reached = {}
        n = cfg.n_start
        while True:
            rows = ensure_cell(
                config, n, cfg.depth, scheme, cfg.trials, cfg.master_seed,
                existing, cfg.parallelism, results_path, evals_path,
                n_mc=cfg.n_mc, progress=progress,
            )
            all_rows.extend(rows)
            stats = _cell_stats(config, n, rows)
            cells.append(stats)
            for eps in cfg.eps_targets:
                if eps not in reached and stats.mean_error <= eps:
                    reached[eps] = n
            if stats.mean_error <= target or n * 2 > cfg.n_cap:
                break
            n *= 2
        for eps in cfg.eps_targets:
            n_eps.append(NEpsEntry(d, m, sigma, eps, reached.get(eps), cfg.n_cap))
        with open(summary_path, "w") as fh:
            json.dump(summary_payload(cells, n_eps), fh, indent=1)
    return SweepResult(cells=cells, n_eps=n_eps, rows=all_rows)


def cells_from_rows(rows) -> list:
    """Recompute per-cell means from stored trial rows."""
    grouped = {}
    for r in rows:
        grouped.setdefault((r.d, r.M, r.sigma, r.depth, r.scheme, r.N), []).append(r)
    cells = []
    for (d, m, sigma, _depth, _scheme, n), group in sorted(grouped.items()):
        cells.append(_cell_stats(TeacherConfig(d, m, sigma), n, group))
    return cells


def n_eps_from_cells(cells, eps: float) -> dict:
    """Smallest tested N whose mean error is <= eps, per (d, M, sigma)."""
    out = {}
    for c in sorted(cells, key=lambda c: (c.d, c.M, c.sigma, c.N)):
        key = (c.d, c.M, c.sigma)
        if c.mean_error <= eps and key not in out:
            out[key] = c.N
    return out


# --- paired width-scheme comparison ----------------------------------------


def run_width_ablation(config: TeacherConfig, n: int, trials: int, depths,
                       master_seed: int, out_dir: str, parallelism: int = 1,
                       n_mc: int = N_MC, progress=None) -> list:
    """Tune first, then same/four_m/best on the same seeds, per depth.

    The 'best' width is the median of the tuned widths at that depth.
    Results persist to out_dir/results.csv with the usual resumption.
    """
    os.makedirs(out_dir, exist_ok=True)
    results_path = os.path.join(out_dir, RESULTS_NAME)
    evals_path = os.path.join(out_dir, EVALS_NAME)
    existing = {result_key(r): r for r in read_results(results_path)}

    from .width_search import median_best_width

    rows = []
    for depth in depths:
        tuned = ensure_cell(
            config, n, depth, WidthScheme("tune"), trials, master_seed,
            existing, parallelism, results_path, evals_path, n_mc=n_mc,
            progress=progress,
        )
        rows.extend(tuned)
        best_w = median_best_width([r.width for r in tuned])
        for scheme in (WidthScheme("same"), WidthScheme("four_m"), WidthScheme("best", best_w)):
            rows.extend(ensure_cell(
                config, n, depth, scheme, trials, master_seed, existing,
                parallelism, results_path, evals_path, n_mc=n_mc, progress=progress,
            ))
    return rows
