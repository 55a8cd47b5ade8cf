"""Timing comparison of the compiled kernels against the numpy fallback.

Times the three hot kernels on representative shapes, then one full
training trial end to end per backend.  Run from the repo root:

    python3 benchmarks/bench_kernels.py [--reps 200] [--skip-e2e]
"""

import argparse
import time

import numpy as np

from relufit import backend
from relufit.backend import available_backends, get_kernels
from relufit.rng import RandomSource
from relufit.student import init_student
from relufit.teacher import TeacherConfig, generate_dataset, sample_teacher

FORWARD_SHAPES = [(64, 4, 16, 1), (64, 8, 128, 1), (1024, 8, 64, 1), (256, 8, 64, 3)]
STEP_SHAPES = [(64, 4, 16, 1), (64, 8, 128, 1), (64, 8, 64, 3)]
GRAM_SIZES = [16, 64]


def timeit(fn, reps: int) -> float:
    """Median seconds per call over reps, after one warmup call."""
    fn()
    samples = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return float(np.median(samples))


def net_params(d: int, width: int, depth: int, seed: int):
    net = init_student(d, depth, width, RandomSource(seed))
    return net.weights, net.biases


def bench_forward(kern, reps: int):
    rows = []
    for batch, d, width, depth in FORWARD_SHAPES:
        weights, biases = net_params(d, width, depth, 1)
        xs = RandomSource(2).normal_matrix(batch, d)
        rows.append(timeit(lambda: kern.mlp_forward(weights, biases, xs), reps))
    return rows


def bench_step(kern, reps: int):
    rows = []
    for batch, d, width, depth in STEP_SHAPES:
        weights, biases = net_params(d, width, depth, 3)
        zeros = lambda arrs: [np.zeros_like(a) for a in arrs]
        m_w, v_w = zeros(weights), zeros(weights)
        m_b, v_b = zeros(biases), zeros(biases)
        xs = RandomSource(4).normal_matrix(batch, d)
        ys = RandomSource(5).standard_normal(batch)
        state = {"t": 0}

        def step():
            state["t"] += 1
            kern.adam_batch_step(weights, biases, m_w, v_w, m_b, v_b,
                                 state["t"], xs, ys, 1e-3, 0.9, 0.999, 1e-8)

        rows.append(timeit(step, reps))
    return rows


def bench_jacobi(kern, reps: int):
    rows = []
    for size in GRAM_SIZES:
        w = RandomSource(6).normal_matrix(size * 2, size)
        gram = w.T @ w
        rows.append(timeit(lambda: kern.jacobi_eigh(gram.copy(), 1e-14, 30), reps))
    return rows


def bench_trial(name: str) -> float:
    """One full width-fixed training run routed through the chosen backend."""
    from relufit.trainer import train_split

    saved = backend.kernels
    backend.kernels = get_kernels(name)
    try:
        teacher = sample_teacher(TeacherConfig(8, 8, 0.1), RandomSource(7))
        data = generate_dataset(teacher, 512, RandomSource(8))
        t0 = time.perf_counter()
        train_split(data, depth=1, width=32, rng=RandomSource(9))
        return time.perf_counter() - t0
    finally:
        backend.kernels = saved


def fmt_us(seconds: float) -> str:
    return f"{seconds * 1e6:10.1f}"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--reps", type=int, default=200, help="timing repetitions per shape")
    parser.add_argument("--skip-e2e", action="store_true", help="kernel micro-benchmarks only")
    args = parser.parse_args(argv)

    names = available_backends()
    print(f"backends available: {', '.join(names)} (active: {backend.BACKEND})")
    if len(names) < 2:
        print("compiled extension not built; timing the numpy fallback alone")

    kerns = {name: get_kernels(name) for name in names}
    sections = [
        ("mlp_forward (batch, d, width, depth)", FORWARD_SHAPES, bench_forward),
        ("adam_batch_step (batch, d, width, depth)", STEP_SHAPES, bench_step),
        ("jacobi_eigh (gram size)", [(s,) for s in GRAM_SIZES], bench_jacobi),
    ]
    for title, shapes, fn in sections:
        print(f"\n{title}")
        per_backend = {name: fn(kerns[name], args.reps) for name in names}
        header = "  shape".ljust(26) + "".join(f"{name:>12}" for name in names)
        print(header + ("     speedup" if len(names) == 2 else ""))
        for i, shape in enumerate(shapes):
            label = str(shape).ljust(24)
            cells = "".join(f"{fmt_us(per_backend[name][i]):>12}" for name in names)
            line = f"  {label}{cells}"
            if len(names) == 2:
                ratio = per_backend[names[0]][i] / per_backend[names[1]][i]
                line += f"{ratio:11.2f}x"
            print(line + "  (us/call)")

    if not args.skip_e2e:
        print("\nfull training run, d=8 M=8 N=512 width=32 depth=1")
        for name in names:
            print(f"  {name:>8}: {bench_trial(name):8.3f} s")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
