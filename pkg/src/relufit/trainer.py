"""The training loop: split, range-test the rate, run epochs, checkpoint.

Query accounting follows one rule everywhere: a query is one consumed
data point.  The range test consumes steps * batch; each epoch consumes
|S_t| (the short final batch counts by its true size).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import InsufficientDataError
from .optim import ADAM_BETA1, ADAM_BETA2, ADAM_EPS, PlateauScheduler, lr_find
from .rng import RandomSource
from .student import StudentNet, init_student
from .teacher import Dataset

BATCH_SIZE = 64
MAX_EPOCHS = 1500
EARLY_STOP_WINDOW = 24
EARLY_STOP_RATIO = 0.01
TRAIN_FRACTION = 0.8

FLAG_LR_FALLBACK = "lr_fallback"
FLAG_NONFINITE = "nonfinite_loss"


@dataclass
class TrainReport:
    """Outcome of one training run at a fixed width."""

    best_val_loss: float
    epochs_run: int
    queries: int
    finder_queries: int
    chosen_lr: float
    best_net: StudentNet
    flags: tuple = ()


def split_dataset(ds: Dataset, rng: RandomSource):
    """Uniform 80/20 partition; both sides are guaranteed nonempty."""
    n = ds.n
    if n < 2:
        raise InsufficientDataError(f"need at least 2 samples to split, got {n}")
    n_train = min(max(int(round(TRAIN_FRACTION * n)), 1), n - 1)
    perm = rng.permutation(n)
    t_idx = perm[:n_train]
    v_idx = perm[n_train:]
    return (
        Dataset(ds.xs[t_idx], ds.ys[t_idx], ds.ys_noiseless[t_idx]),
        Dataset(ds.xs[v_idx], ds.ys[v_idx], ds.ys_noiseless[v_idx]),
    )


def validation_loss(weights: list, biases: list, xs: np.ndarray, ys: np.ndarray) -> float:
    pred = backend.kernels.mlp_forward(weights, biases, xs)
    r = pred - ys
    return float(r @ r) / len(ys)


def train(train_set: Dataset, val_set: Dataset, depth: int, width: int,
          rng: RandomSource, log_path: str | None = None) -> TrainReport:
    """Train a fresh student of the given shape on an existing split.

    Runs the learning-rate range test first (on a throwaway copy), then
    Adam epochs under a plateau schedule until validation loss has not
    improved by more than 1% over the best in 24 epochs, or 1500 epochs.
    Returns the parameters from the best validation epoch.
    """
    d = train_set.d
    n_train = train_set.n
    init_rng = rng.child(0)
    finder_rng = rng.child(1)
    epoch_rng = rng.child(2)

    net = init_student(d, depth, width, init_rng)
    finder = lr_find(net, train_set.xs, train_set.ys, finder_rng, BATCH_SIZE)
    flags = (FLAG_LR_FALLBACK,) if finder.fallback else ()
    queries = finder.queries

    m_w = [np.zeros_like(w) for w in net.weights]
    v_w = [np.zeros_like(w) for w in net.weights]
    m_b = [np.zeros_like(b) for b in net.biases]
    v_b = [np.zeros_like(b) for b in net.biases]
    step_count = 0

    sched = PlateauScheduler(finder.chosen)
    best_val = math.inf
    best_weights = [w.copy() for w in net.weights]
    best_biases = [b.copy() for b in net.biases]
    significant_best = math.inf
    stale = 0
    epochs_run = 0
    log_rows = []
    kern = backend.kernels

    for epoch in range(1, MAX_EPOCHS + 1):
        order = epoch_rng.permutation(n_train)
        lr = sched.lr
        loss_sum = 0.0
        batches = 0
        aborted = False
        for start in range(0, n_train, BATCH_SIZE):
            idx = order[start:start + BATCH_SIZE]
            xb = np.ascontiguousarray(train_set.xs[idx])
            yb = np.ascontiguousarray(train_set.ys[idx])
            step_count += 1
            loss = kern.adam_batch_step(
                net.weights, net.biases, m_w, v_w, m_b, v_b, step_count,
                xb, yb, lr, ADAM_BETA1, ADAM_BETA2, ADAM_EPS,
            )
            queries += len(idx)
            batches += 1
            if not math.isfinite(loss):
                aborted = True
                break
            loss_sum += loss
        if aborted:
            flags = flags + (FLAG_NONFINITE,)
            break
        epochs_run = epoch

        val = validation_loss(net.weights, net.biases, val_set.xs, val_set.ys)
        if not math.isfinite(val):
            flags = flags + (FLAG_NONFINITE,)
            break
        if val < best_val:
            best_val = val
            best_weights = [w.copy() for w in net.weights]
            best_biases = [b.copy() for b in net.biases]
        sched.step(val)
        if val < (1.0 - EARLY_STOP_RATIO) * significant_best:
            significant_best = val
            stale = 0
        else:
            stale += 1
        if log_path is not None:
            log_rows.append((epoch, loss_sum / batches, val, lr))
        if stale >= EARLY_STOP_WINDOW:
            break

    if log_path is not None:
        with open(log_path, "w") as fh:
            fh.write("epoch,train_loss,val_loss,lr\n")
            for row in log_rows:
                fh.write(f"{row[0]},{row[1]!r},{row[2]!r},{row[3]!r}\n")

    best_net = StudentNet(d, depth, width, best_weights, best_biases)
    return TrainReport(
        best_val_loss=best_val,
        epochs_run=epochs_run,
        queries=queries,
        finder_queries=finder.queries,
        chosen_lr=finder.chosen,
        best_net=best_net,
        flags=flags,
    )


def train_split(ds: Dataset, depth: int, width: int, rng: RandomSource,
                log_path: str | None = None) -> TrainReport:
    """Convenience wrapper: split with one rng child, train with another."""
    train_set, val_set = split_dataset(ds, rng.child(0))
    return train(train_set, val_set, depth, width, rng.child(1), log_path=log_path)
