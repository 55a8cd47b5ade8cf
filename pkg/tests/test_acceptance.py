"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``cNN PASS/FAIL: ...`` line (run with -s to
see them live) carrying the measured quantities, then asserts.  The
heavy sweeps cache their trial rows under .cache/ at the repo root, so
re-runs are fast; delete that directory to recompute from scratch.
"""

import json
import math
import os
from dataclasses import replace
from pathlib import Path

import numpy as np

from relufit.conditioning import compute_log_lambda, lambda_sweep
from relufit.config import load_sweep_config
from relufit.experiment import (
    estimate_error,
    run_sweep,
    run_width_ablation,
)
from relufit.optim import (
    ADAM_BETA1,
    ADAM_BETA2,
    ADAM_EPS,
    adam_step,
    init_adam,
)
from relufit.rng import RandomSource
from relufit.student import StudentNet, backward, forward, from_flat, init_student, to_flat
from relufit.teacher import TeacherConfig, sample_teacher, teacher_predict
from relufit.width_search import golden_section

REPO_ROOT = Path(__file__).resolve().parent.parent
SWEEP_CONFIG = REPO_ROOT / "configs" / "desk_scaling.toml"
SWEEP_CACHE = REPO_ROOT / ".cache" / "acceptance"
ABLATION_CACHE = REPO_ROOT / ".cache" / "ablation"

FD_H = 1e-5

_memo = {}


def report(cid: str, ok: bool, detail: str) -> str:
    line = f"{cid} {'PASS' if ok else 'FAIL'}: {detail}"
    print(line, flush=True)
    return line


def least_squares_slope(xs, ys) -> float:
    a = np.vstack([np.asarray(xs, float), np.ones(len(xs))]).T
    coef, *_ = np.linalg.lstsq(a, np.asarray(ys, float), rcond=None)
    return float(coef[0])


# --- criterion 1: analytic gradients vs central differences -----------------

def loss_of(net, xs, ys) -> float:
    preds, _ = forward(net, xs)
    return float(np.mean((preds - ys) ** 2))


def numeric_gradient(net, xs, ys) -> np.ndarray:
    flat = to_flat(net)
    grad = np.zeros_like(flat)
    for i in range(flat.size):
        bumped = flat.copy()
        bumped[i] = flat[i] + FD_H
        hi = loss_of(from_flat(net.d, net.depth, net.width, bumped), xs, ys)
        bumped[i] = flat[i] - FD_H
        lo = loss_of(from_flat(net.d, net.depth, net.width, bumped), xs, ys)
        grad[i] = (hi - lo) / (2.0 * FD_H)
    return grad


def test_c01_gradient_correctness():
    rng = RandomSource(101)
    cases = 0
    worst_rel = 0.0
    failures = 0
    while cases < 102:
        sub = rng.child(cases)
        depth = 1 + cases % 3
        d = 1 + int(sub.child(0).standard_normal(1)[0] ** 2 * 4) % 16
        width = 2 + cases % 15
        batch = 1 + cases % 8
        net = init_student(d, depth, width, sub.child(1))
        # random biases keep pre-activations off the ReLU kink, where a
        # central difference cannot match any subgradient convention
        bias_rng = sub.child(2)
        for b in net.biases:
            b[:] = 0.3 * bias_rng.standard_normal(b.size)
        xs = sub.child(3).normal_matrix(batch, d)
        ys = sub.child(4).standard_normal(batch)
        preds, cache = forward(net, xs)
        _, gset = backward(net, cache, preds, ys)
        parts = []
        for gw, gb in zip(gset.weights, gset.biases):
            parts.append(gw.reshape(-1))
            parts.append(gb)
        analytic = np.concatenate(parts)
        numeric = numeric_gradient(net, xs, ys)
        diff = np.abs(analytic - numeric)
        tol = np.maximum(1e-7, 1e-4 * np.abs(numeric))
        failures += int(np.any(diff > tol))
        denom = np.maximum(np.abs(numeric), 1e-7)
        worst_rel = max(worst_rel, float((diff / denom).max()))
        cases += 1
    line = report(
        "c01", failures == 0,
        f"{cases} random nets, every entry within 1e-4 rel / 1e-7 abs "
        f"(worst rel {worst_rel:.2e}, failing nets {failures})",
    )
    assert failures == 0, line


# --- criterion 2: Adam against an independent recurrence ---------------------

def test_c02_adam_oracle():
    worst = 0.0
    first_ok = True
    for g in (1.0, -0.5, 3.0, 0.01, -7.25):
        lr = 0.1
        param = [np.zeros(1)]
        state = init_adam(param, lr)
        m = v = 0.0
        x_ref = 0.0
        for t in range(1, 6):
            adam_step(state, param, [np.full(1, g)])
            m = ADAM_BETA1 * m + (1 - ADAM_BETA1) * g
            v = ADAM_BETA2 * v + (1 - ADAM_BETA2) * g * g
            m_hat = m / (1 - ADAM_BETA1 ** t)
            v_hat = v / (1 - ADAM_BETA2 ** t)
            x_ref -= lr * m_hat / (math.sqrt(v_hat) + ADAM_EPS)
            worst = max(worst, abs(float(param[0][0]) - x_ref))
            if t == 1:
                want = -lr * math.copysign(1.0, g)
                rel = abs(float(param[0][0]) - want) / abs(want)
                first_ok = first_ok and rel <= 1e-6
    ok = worst <= 1e-12 and first_ok
    line = report(
        "c02", ok,
        f"5-step recurrence max |diff| {worst:.2e} (<= 1e-12), "
        f"first step = lr*sign(g) within 1e-6 rel: {first_ok}",
    )
    assert ok, line


# --- criterion 3: golden-section contract ------------------------------------

def test_c03_golden_section():
    best_x, _, evals = golden_section(lambda u: (u - 3.0) ** 2, 1.0, 5.0, 0.25)
    ok = abs(best_x - 3.0) <= 0.25 and evals <= 10
    line = report(
        "c03", ok,
        f"(u-3)^2 on [1,5] tol 0.25: u={best_x:.4f} "
        f"(|u-3|={abs(best_x - 3.0):.4f} <= 0.25), {evals} evaluations (<= 10)",
    )
    assert ok, line


# --- criterion 4: teacher output variance ------------------------------------

def test_c04_teacher_variance():
    # ensemble variance: each draw pairs a fresh teacher with fresh inputs,
    # since a single small-M instance's variance is itself widely dispersed
    teachers, per = 1000, 100
    measured = {}
    for i, (d, m) in enumerate(((4, 4), (16, 16), (64, 64))):
        rng = RandomSource(400 + i)
        vals = []
        for k in range(teachers):
            sub = rng.child(k)
            teacher = sample_teacher(TeacherConfig(d, m, 0.1), sub.child(0))
            vals.append(teacher_predict(teacher, sub.child(1).normal_matrix(per, d)))
        measured[(d, m)] = float(np.var(np.concatenate(vals)))
    ok = all(0.3 <= v <= 0.7 for v in measured.values())
    detail = ", ".join(f"({d},{m})={v:.3f}" for (d, m), v in measured.items())
    line = report(
        "c04", ok,
        f"Var[g(X)] over {teachers * per} draws in [0.3, 0.7]: {detail}",
    )
    assert ok, line


# --- criteria 5 and 6: sample complexity and query count sweep ---------------

def scaling_sweep():
    """The checked-in desk-scale config, cached across tests and runs."""
    if "sweep" not in _memo:
        cfg = load_sweep_config(str(SWEEP_CONFIG))
        cfg = replace(cfg, out_dir=str(SWEEP_CACHE), parallelism=1)
        _memo["sweep"] = run_sweep(cfg)
    return _memo["sweep"]


def test_c05_sample_complexity_scaling():
    result = scaling_sweep()
    n_eps = {(e.d, e.M): e.n_eps for e in result.n_eps if e.epsilon == 1.0}
    unresolved = sorted(k for k, v in n_eps.items() if v is None)
    assert not unresolved, f"cells hit the N cap before reaching eps=1: {unresolved}"

    log_dm = [math.log(d * m) for d, m in sorted(n_eps)]
    log_n = [math.log(n_eps[k]) for k in sorted(n_eps)]
    slope = least_squares_slope(log_dm, log_n)
    ratios = [n_eps[(d, m)] / (d * m) for d, m in n_eps if d * m >= 16]
    med = float(np.median(ratios))
    ok_a = 0.65 <= slope <= 1.35
    ok_b = 0.3 <= med <= 8.0
    line = report(
        "c05", ok_a and ok_b,
        f"(a) slope log N_eps vs log(dM) = {slope:.3f} in [0.65, 1.35]: {ok_a}; "
        f"(b) median eps*N_eps/(dM) over dM>=16 = {med:.2f} in [0.3, 8]: {ok_b}",
    )
    assert ok_a and ok_b, line


def test_c06_query_linearity():
    result = scaling_sweep()
    log_n = [math.log(c.N) for c in result.cells]
    log_t = [math.log(c.mean_queries) for c in result.cells]
    slope = least_squares_slope(log_n, log_t)
    worst = max(r.queries / r.N for r in result.rows)
    ok = slope <= 1.1 and worst <= 1e5
    line = report(
        "c06", ok,
        f"slope log T vs log N = {slope:.3f} (<= 1.1), "
        f"max T/N = {worst:.0f} (<= 1e5) over {len(result.rows)} trials",
    )
    assert ok, line


# --- criterion 7: conditioning parameter growth -------------------------------

def test_c07_lambda_study():
    m_values = (2, 4, 8, 16, 32)
    result = lambda_sweep(m_values=m_values, trials=200, master_seed=2024)
    medians = [s.median for s in result.summaries]
    increasing = all(b > a for a, b in zip(medians, medians[1:]))

    ln_med = np.array(medians) * math.log(10.0)
    ms = np.array(m_values, float)
    slope = least_squares_slope(ms, ln_med)
    pred = slope * ms + (ln_med.mean() - slope * ms.mean())
    r2 = 1.0 - float(np.sum((ln_med - pred) ** 2)) / float(np.sum((ln_med - ln_med.mean()) ** 2))

    min_log = min(s.log10_lambda * math.log(10.0) for s in result.samples)
    worst_si = 0.0
    for t in range(100):
        gen = np.random.Generator(np.random.Philox(key=700 + t))
        w = gen.standard_normal((int(gen.integers(2, 20)), int(gen.integers(2, 20))))
        c = float(10.0 ** gen.uniform(-3, 3))
        worst_si = max(worst_si, abs(compute_log_lambda(c * w) - compute_log_lambda(w)))

    ok = increasing and slope > 0 and r2 >= 0.9 and min_log >= -1e-9 and worst_si <= 1e-9
    line = report(
        "c07", ok,
        f"median log10(lambda) strictly increasing: {increasing}; "
        f"ln-fit slope {slope:.2f} > 0 with R^2 {r2:.3f} >= 0.9; "
        f"min log(lambda) {min_log:.2e} >= -1e-9; "
        f"scale-invariance max diff {worst_si:.2e} <= 1e-9",
    )
    assert ok, line


# --- criterion 8: error evaluator exactness -----------------------------------

def test_c08_error_evaluator():
    config = TeacherConfig(3, 5, 0.1)
    teacher = sample_teacher(config, RandomSource(800))
    copied = StudentNet(
        d=3, depth=1, width=5,
        weights=[np.ascontiguousarray(teacher.a.T),
                 np.ascontiguousarray(teacher.theta.reshape(-1, 1))],
        biases=[teacher.b.copy(), np.zeros(1)],
    )
    copied_err = estimate_error(copied, teacher, 0.1, 4096, RandomSource(801))

    zero = init_student(3, 1, 5, RandomSource(802))
    for w in zero.weights:
        w[:] = 0.0
    for b in zero.biases:
        b[:] = 0.0
    zero_err = estimate_error(zero, teacher, 0.1, 4096, RandomSource(803))
    xs = RandomSource(803).normal_matrix(4096, 3)
    direct = float(np.mean(teacher_predict(teacher, xs) ** 2)) / (2.0 * 0.1 * 0.1)

    ok = copied_err == 0.0 and abs(zero_err - direct) <= 1e-12
    line = report(
        "c08", ok,
        f"copied student error = {copied_err!r} (exactly 0.0); "
        f"zero student vs shared-sample MC |diff| = {abs(zero_err - direct):.2e} (<= 1e-12)",
    )
    assert ok, line


# --- criterion 9: byte-identical re-runs ---------------------------------------

def test_c09_determinism(tmp_path):
    cfg = load_sweep_config(str(SWEEP_CONFIG))
    cfg = replace(
        cfg, d_list=[2], m_list=[2], trials=2, n_start=16, n_cap=32,
        master_seed=9077, parallelism=1, out_dir="",
    )
    blobs = []
    for name in ("a", "b"):
        out = tmp_path / name
        run_sweep(replace(cfg, out_dir=str(out)))
        blobs.append((out / "results.csv").read_bytes())
    ok = blobs[0] == blobs[1] and len(blobs[0]) > 0
    line = report(
        "c09", ok,
        f"two fresh runs of the (d=2, M=2) cell ladder produced "
        f"byte-identical results.csv ({len(blobs[0])} bytes)",
    )
    assert ok, line


# --- criterion 10: width-scheme ablation smoke ----------------------------------

def test_c10_width_ablation():
    rows = run_width_ablation(
        TeacherConfig(4, 4, 0.1), n=1024, trials=8, depths=(1, 2, 3),
        master_seed=2024, out_dir=str(ABLATION_CACHE), parallelism=1,
    )
    flagged = [r for r in rows if r.flag]
    means = {}
    for r in rows:
        means.setdefault((r.depth, r.scheme), []).append(r.error)
    counts_ok = all(
        len(means.get((depth, scheme), ())) >= 8
        for depth in (1, 2, 3)
        for scheme in ("tune", "same", "four_m", "best")
    )
    ratios = {
        depth: float(np.mean(means[(depth, "tune")]) / np.mean(means[(depth, "same")]))
        for depth in (1, 2, 3)
    }
    ratio_ok = all(r <= 1.5 for r in ratios.values())
    ok = not flagged and counts_ok and ratio_ok
    detail = ", ".join(f"depth {d}: tune/same = {r:.3f}" for d, r in sorted(ratios.items()))
    line = report(
        "c10", ok,
        f"(4,4) N=1024, 8 trials: {detail} (each <= 1.5); "
        f"all depth x scheme cells complete: {counts_ok}; flagged trials: {len(flagged)}",
    )
    assert ok, line
