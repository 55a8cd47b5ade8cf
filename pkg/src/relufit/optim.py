"""Adam, plateau scheduling, and the learning-rate range test.

The range test ramps the learning rate geometrically during throwaway
training steps, smooths the loss trace, and picks the median of three
standard heuristics (steepest descent point, min/20, valley midpoint).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .rng import RandomSource

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

FINDER_START_LR = 1e-8
FINDER_MAX_LR = 10.0
FINDER_STEPS_PER_DECADE = 100
FINDER_SMOOTHING = 0.98
FINDER_DIVERGENCE_RATIO = 4.0
FINDER_FALLBACK_LR = 1e-3
VALLEY_BAND = 1.05


@dataclass
class AdamState:
    """First/second moment accumulators for a list of parameter arrays."""

    lr: float
    m: list
    v: list
    t: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS


def init_adam(params: list, lr: float) -> AdamState:
    return AdamState(lr=lr, m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params])


def adam_step(state: AdamState, params: list, grads: list) -> None:
    """One Adam update, in place on params and state.

    Bias-corrected moments; eps sits outside the square root, so the
    denominator is sqrt(v_hat) + eps.
    """
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


class PlateauScheduler:
    """Cut the learning rate 10x after `patience` non-improving epochs.

    An epoch improves when its validation loss beats the best seen by more
    than a 1e-4 relative margin.  The rate only ever decreases.
    """

    def __init__(self, lr: float, factor: float = 0.1, patience: int = 12, threshold: float = 1e-4):
        self.lr = lr
        self.factor = factor
        self.patience = patience
        self.threshold = threshold
        self.best = math.inf
        self.num_bad = 0

    def step(self, val_loss: float) -> float:
        """Record one epoch's validation loss; returns the rate to use next."""
        if val_loss < self.best * (1.0 - self.threshold):
            self.best = val_loss
            self.num_bad = 0
        else:
            self.num_bad += 1
        if self.num_bad > self.patience:
            self.lr *= self.factor
            self.num_bad = 0
        return self.lr


# --- learning-rate range test --------------------------------------------


@dataclass
class LrFinderResult:
    chosen: float
    steep: float
    minimum: float
    valley: float
    trace: list = field(default_factory=list)  # (lr, smoothed loss) pairs
    steps: int = 0
    queries: int = 0
    fallback: bool = False


def ramp_rates(start: float = FINDER_START_LR, stop: float = FINDER_MAX_LR,
               steps_per_decade: int = FINDER_STEPS_PER_DECADE) -> np.ndarray:
    """Geometric ramp from start up to (and including) stop."""
    decades = math.log10(stop) - math.log10(start)
    n = int(round(decades * steps_per_decade)) + 1
    return 10.0 ** (math.log10(start) + np.arange(n) / steps_per_decade)


def run_lr_ramp(step_fn, rates, smoothing: float = FINDER_SMOOTHING,
                divergence_ratio: float = FINDER_DIVERGENCE_RATIO):
    """Drive step_fn(lr) across the ramp, recording the smoothed loss.

    Stops early once the smoothed loss exceeds divergence_ratio times its
    running minimum, or the first time a step reports a non-finite loss.
    Returns the (lr, smoothed) trace and the number of steps taken.
    """
    trace = []
    ema = None
    best = math.inf
    steps = 0
    for lr in rates:
        loss = step_fn(float(lr))
        steps += 1
        if not math.isfinite(loss):
            break
        ema = loss if ema is None else smoothing * ema + (1.0 - smoothing) * loss
        trace.append((float(lr), ema))
        if ema < best:
            best = ema
        if ema > divergence_ratio * best:
            break
    return trace, steps


def _longest_flat_window(log_losses: np.ndarray, band: float):
    """Longest index window whose loss stays within `band` of its own min.

    Works on log losses, so the criterion is max - min <= log(band).
    Two-pointer scan with monotonic index deques; O(n).
    """
    from collections import deque

    limit = math.log(band)
    max_q: deque = deque()  # indices, decreasing values
    min_q: deque = deque()  # indices, increasing values
    best = (0, 0)
    a = 0
    for b, value in enumerate(log_losses):
        while max_q and log_losses[max_q[-1]] <= value:
            max_q.pop()
        max_q.append(b)
        while min_q and log_losses[min_q[-1]] >= value:
            min_q.pop()
        min_q.append(b)
        while log_losses[max_q[0]] - log_losses[min_q[0]] > limit:
            a += 1
            if max_q[0] < a:
                max_q.popleft()
            if min_q[0] < a:
                min_q.popleft()
        if b - a > best[1] - best[0]:
            best = (a, b)
    return best


def pick_rates(trace):
    """The three heuristic rates from a finished ramp trace.

    Returns None when the smoothed loss never dropped below its starting
    value, i.e. the ramp saw no finite decrease.
    """
    if len(trace) < 2:
        return None
    lrs = np.array([p[0] for p in trace])
    losses = np.array([p[1] for p in trace])
    if not np.any(losses[1:] < losses[0]):
        return None
    logs = np.log(np.maximum(losses, 1e-300))

    slopes = np.diff(logs)
    steep = float(lrs[int(np.argmin(slopes)) + 1])
    minimum = float(lrs[int(np.argmin(losses))] / 20.0)
    a, b = _longest_flat_window(logs, VALLEY_BAND)
    valley = float(math.sqrt(lrs[a] * lrs[b]))
    return steep, minimum, valley


def lr_find(net, xs: np.ndarray, ys: np.ndarray, rng: RandomSource,
            batch_size: int = 64) -> LrFinderResult:
    """Range test on a throwaway copy of `net` over the training arrays.

    Every step consumes exactly min(batch_size, n) samples, drawn from a
    reshuffled pass order, so queries == steps * batch.  Falls back to
    1e-3, flagged, when the loss never decreases.
    """
    n = len(ys)
    if n < 1:
        raise ValueError("lr_find needs at least one sample")
    bs = min(batch_size, n)

    weights = [w.copy() for w in net.weights]
    biases = [b.copy() for b in net.biases]
    m_w = [np.zeros_like(w) for w in weights]
    v_w = [np.zeros_like(w) for w in weights]
    m_b = [np.zeros_like(b) for b in biases]
    v_b = [np.zeros_like(b) for b in biases]
    kern = backend.kernels

    order = rng.permutation(n)
    state = {"pos": 0, "order": order, "t": 0}

    def step(lr: float) -> float:
        if state["pos"] + bs > n:
            state["order"] = rng.permutation(n)
            state["pos"] = 0
        idx = state["order"][state["pos"]:state["pos"] + bs]
        state["pos"] += bs
        state["t"] += 1
        return kern.adam_batch_step(
            weights, biases, m_w, v_w, m_b, v_b, state["t"],
            np.ascontiguousarray(xs[idx]), np.ascontiguousarray(ys[idx]),
            lr, ADAM_BETA1, ADAM_BETA2, ADAM_EPS,
        )

    trace, steps = run_lr_ramp(step, ramp_rates())
    picked = pick_rates(trace)
    queries = steps * bs
    if picked is None:
        return LrFinderResult(
            chosen=FINDER_FALLBACK_LR, steep=math.nan, minimum=math.nan,
            valley=math.nan, trace=trace, steps=steps, queries=queries, fallback=True,
        )
    steep, minimum, valley = picked
    chosen = sorted((steep, minimum, valley))[1]
    return LrFinderResult(
        chosen=chosen, steep=steep, minimum=minimum, valley=valley,
        trace=trace, steps=steps, queries=queries, fallback=False,
    )


def dump_trace(result: LrFinderResult, path: str) -> None:
    """Write the (lr, smoothed loss) trace as a two-column CSV."""
    with open(path, "w") as fh:
        fh.write("lr,smoothed_loss\n")
        for lr, loss in result.trace:
            fh.write(f"{lr!r},{loss!r}\n")
