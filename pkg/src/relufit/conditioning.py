"""Spectral spread of Gaussian-product weight matrices.

For W[i, j] = G[i, j] * h[j] with G entries N(0, 1/d) and h entries
N(0, 1/M), the statistic lambda = (prod_i sigma_i) / sigma_k^k over the
k = min(d, M) singular values measures how far the spectrum spreads
above its floor.  Everything is computed in the log domain; by
construction log(lambda) is a sum of nonnegative gaps, so it can never
go negative, and scaling W only shifts all log singular values equally,
which cancels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import SV_FLOOR, singular_values
from .rng import RandomSource, derive_seed

LN10 = math.log(10.0)


class SpectrumUnderflowError(ArithmeticError):
    """The smallest singular value sat at the clamp floor."""


def sample_weight_matrix(d: int, m: int, rng: RandomSource) -> np.ndarray:
    """Draw W = G * h (columns of G scaled by h entries)."""
    g = rng.normal_matrix(d, m) / math.sqrt(d)
    h = rng.standard_normal(m) / math.sqrt(m)
    return g * h[None, :]


def compute_log_lambda(w: np.ndarray) -> float:
    """Natural log of lambda, as a sum of log singular-value gaps.

    Raises SpectrumUnderflowError when sigma_k is at the clamp floor,
    where the ratio is no longer meaningful.
    """
    vals = singular_values(w)
    k = min(w.shape)
    floor = vals[k - 1]
    if floor <= SV_FLOOR:
        raise SpectrumUnderflowError(f"sigma_{k} at clamp floor {SV_FLOOR}")
    log_floor = math.log(floor)
    return float(sum(math.log(v) - log_floor for v in vals[:k]))


@dataclass
class LambdaSample:
    d: int
    M: int
    trial: int
    log10_lambda: float


@dataclass
class LambdaSummary:
    M: int
    d: int
    median: float  # of log10(lambda)
    q05: float
    q95: float
    trials: int
    underflows: int


@dataclass
class LambdaSweepResult:
    samples: list = field(default_factory=list)
    summaries: list = field(default_factory=list)


def lambda_sweep(m_values, trials: int, master_seed: int,
                 d_factor: int = 2) -> LambdaSweepResult:
    """log10(lambda) quantiles per M, with d = d_factor * M.

    Underflowed samples are counted and excluded from the quantiles.
    """
    result = LambdaSweepResult()
    for m in m_values:
        d = d_factor * m
        values = []
        underflows = 0
        for trial in range(trials):
            rng = RandomSource(derive_seed(master_seed, "lambda", d, m, trial))
            w = sample_weight_matrix(d, m, rng)
            try:
                log10_lambda = compute_log_lambda(w) / LN10
            except SpectrumUnderflowError:
                underflows += 1
                continue
            values.append(log10_lambda)
            result.samples.append(LambdaSample(d, m, trial, log10_lambda))
        arr = np.array(values)
        result.summaries.append(LambdaSummary(
            M=m, d=d,
            median=float(np.median(arr)),
            q05=float(np.percentile(arr, 5.0)),
            q95=float(np.percentile(arr, 95.0)),
            trials=len(values),
            underflows=underflows,
        ))
    return result


def samples_to_csv(result: LambdaSweepResult, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("M,d,trial,log10_lambda\n")
        for s in result.samples:
            fh.write(f"{s.M},{s.d},{s.trial},{s.log10_lambda!r}\n")


def summary_payload(result: LambdaSweepResult) -> dict:
    return {
        "summaries": [
            {
                "M": s.M, "d": s.d, "median_log10_lambda": s.median,
                "q05": s.q05, "q95": s.q95, "trials": s.trials,
                "underflows": s.underflows,
            }
            for s in result.summaries
        ]
    }
