"""Choosing the student width: fixed schemes and golden-section search.

The search works on u = log2(width) over [1, log2(max_width)], probing
integer widths (round, clamp) and memoizing so two probes that round to
the same width train once.  max_width caps capacity as a function of
depth, sample count, and teacher size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import InsufficientDataError
from .rng import RandomSource
from .teacher import Dataset
from .trainer import TrainReport, split_dataset, train

GOLDEN_TOL = 0.25
MIN_WIDTH = 2
INVPHI = (math.sqrt(5.0) - 1.0) / 2.0

SCHEME_NAMES = ("same", "four_m", "tune", "best")


@dataclass(frozen=True)
class WidthScheme:
    """How the student width is picked for one trial.

    same: teacher width M.  four_m: 4M.  tune: golden-section search.
    best: a width fixed in advance (the median of earlier tuned runs).
    """

    kind: str
    width: int | None = None

    def __post_init__(self):
        if self.kind not in SCHEME_NAMES:
            raise ValueError(f"unknown width scheme {self.kind!r}")
        if self.kind == "best" and (self.width is None or self.width < 1):
            raise ValueError("scheme 'best' needs a positive precomputed width")


def max_width(depth: int, n: int, d: int, m: int) -> int:
    """Width cap for the search interval, rounded down."""
    spread = math.sqrt(d * m) + max(d, m)
    if depth == 1:
        cap = 32 + 8 * max(n, spread)
    elif depth == 2:
        cap = 32 + 2 * max(2 * math.sqrt(n), 2 * math.sqrt(d * m) + 2 * max(d, m))
    elif depth == 3:
        cap = 16 + 2 * max(2 * math.sqrt(n), 2 * math.sqrt(d * m) + 2 * max(d, m))
    else:
        raise ValueError(f"depth must be 1, 2, or 3, got {depth}")
    return int(cap)


def golden_section(f, lo: float, hi: float, tol: float = GOLDEN_TOL):
    """Minimize a unimodal f on [lo, hi] by golden-section contraction.

    Returns (best x, best f(x), evaluations).  One new evaluation per
    contraction after the two opening probes; for a range r the total is
    2 + ceil(log(r / tol) / log(1/invphi)).
    """
    if not hi > lo:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    a, b = lo, hi
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc = f(c)
    fd = f(d)
    evals = 2
    best_x, best_f = (c, fc) if fc <= fd else (d, fd)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = f(d)
        evals += 1
        newest = (c, fc) if fc <= fd else (d, fd)
        if newest[1] < best_f:
            best_x, best_f = newest
    return best_x, best_f, evals


def golden_section_log2(evaluate, lo: float, hi: float, tol: float = GOLDEN_TOL,
                        width_bounds=(MIN_WIDTH, None)):
    """Golden-section over log2(width) with integer probes.

    evaluate(width) is called at most once per distinct width (memoized);
    probes round 2**u and clamp into width_bounds.  Returns the evaluated
    width with the lowest value and the evaluation list in call order.
    """
    low_w, high_w = width_bounds
    memo = {}
    evaluations = []

    def probe(u: float) -> float:
        w = int(round(2.0 ** u))
        w = max(w, low_w)
        if high_w is not None:
            w = min(w, high_w)
        if w not in memo:
            memo[w] = evaluate(w)
            evaluations.append((w, memo[w]))
        return memo[w]

    golden_section(probe, lo, hi, tol)
    best_width = min(memo, key=lambda w: (memo[w], w))
    return best_width, evaluations


@dataclass
class SearchOutcome:
    """Result of width selection for one trial."""

    best_width: int
    best_report: TrainReport
    evaluations: list = field(default_factory=list)  # (width, val_loss) pairs
    total_queries: int = 0
    flags: tuple = ()


def select_and_train(ds: Dataset, depth: int, scheme: WidthScheme,
                     rng: RandomSource, teacher_m: int) -> SearchOutcome:
    """Split once, then train per the scheme, sharing the split.

    Every width gets its own rng child keyed by the width itself, so the
    same width trains identically whether reached by search or directly.
    A flagged training run counts as +inf for selection but its queries
    still count; they were spent.
    """
    split_rng = rng.child(0)
    width_rng = rng.child(1)
    train_set, val_set = split_dataset(ds, split_rng)
    reports = {}

    def evaluate(w: int) -> float:
        report = train(train_set, val_set, depth, w, width_rng.child(w))
        reports[w] = report
        if report.flags or not math.isfinite(report.best_val_loss):
            return math.inf
        return report.best_val_loss

    if scheme.kind == "tune":
        cap = max_width(depth, ds.n, ds.d, teacher_m)
        if cap < MIN_WIDTH:
            raise InsufficientDataError(f"width cap {cap} below minimum {MIN_WIDTH}")
        best_width, evaluations = golden_section_log2(
            evaluate, 1.0, math.log2(cap), GOLDEN_TOL, (MIN_WIDTH, cap)
        )
    else:
        if scheme.kind == "same":
            w = teacher_m
        elif scheme.kind == "four_m":
            w = 4 * teacher_m
        else:
            w = scheme.width
        evaluations = [(w, evaluate(w))]
        best_width = w

    best_report = reports[best_width]
    return SearchOutcome(
        best_width=best_width,
        best_report=best_report,
        evaluations=evaluations,
        total_queries=sum(r.queries for r in reports.values()),
        flags=best_report.flags,
    )


def median_best_width(widths) -> int:
    """The width the 'best' scheme reuses: median of tuned widths."""
    if not widths:
        raise ValueError("need at least one width")
    ordered = sorted(widths)
    mid = len(ordered) // 2
    if len(ordered) % 2 == 1:
        return ordered[mid]
    return int(round((ordered[mid - 1] + ordered[mid]) / 2.0))
