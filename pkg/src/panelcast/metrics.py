"""Forecast accuracy metrics, cross-series aggregation, the seasonal-naive
benchmark, and a self-contained paired Wilcoxon signed-rank test."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import mean, median
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateScaleError, LengthError, ShapeError


def smape(forecast, actual) -> float:
    """Symmetric mean absolute percentage error, in [0, 2].

    A term with forecast = actual = 0 counts as 0: a zero count forecast
    perfectly is a perfect forecast, even though the ratio is undefined.
    """
    f = np.asarray(forecast, dtype=np.float64)
    y = np.asarray(actual, dtype=np.float64)
    if f.shape != y.shape or f.ndim != 1 or f.size == 0:
        raise ShapeError(f"need equal-length vectors, got {f.shape} and {y.shape}")
    num = np.abs(f - y)
    den = np.abs(f) + np.abs(y)
    terms = np.divide(num, den, out=np.zeros_like(num), where=den != 0)
    return float(2.0 * terms.mean())


def mase(forecast, actual, train, period: int) -> float:
    """Mean absolute scaled error: MAE over the test frame divided by the
    in-sample one-season-back naive MAE of the training series."""
    f = np.asarray(forecast, dtype=np.float64)
    y = np.asarray(actual, dtype=np.float64)
    tr = np.asarray(train, dtype=np.float64)
    if f.shape != y.shape or f.ndim != 1 or f.size == 0:
        raise ShapeError(f"need equal-length vectors, got {f.shape} and {y.shape}")
    n = tr.size
    if n <= period:
        raise LengthError(f"training series of length {n} cannot scale with period {period}")
    scale = float(np.mean(np.abs(tr[period:] - tr[:-period])))
    if scale == 0.0:
        raise DegenerateScaleError(
            "training series is exactly periodic; the scaled error is undefined"
        )
    return float(np.mean(np.abs(f - y))) / scale


def seasonal_naive(train, period: int, horizon: int) -> np.ndarray:
    """Repeat the last observed seasonal cycle for `horizon` steps."""
    tr = np.asarray(train, dtype=np.float64)
    if tr.size < period:
        raise LengthError(f"need at least {period} observations, got {tr.size}")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    cycle = tr[tr.size - period :]
    return cycle[np.arange(horizon) % period]


@dataclass(frozen=True)
class SeriesScore:
    series_id: str
    smape: float
    mase: float


@dataclass
class EvalReport:
    """Per-series scores plus the four aggregate columns used for reporting:
    mean sMAPE, median sMAPE, mean MASE, median MASE."""

    method: str
    scores: list[SeriesScore] = field(default_factory=list)

    @property
    def mean_smape(self) -> float:
        return mean(s.smape for s in self.scores)

    @property
    def median_smape(self) -> float:
        return median(s.smape for s in self.scores)

    @property
    def mean_mase(self) -> float:
        return mean(s.mase for s in self.scores)

    @property
    def median_mase(self) -> float:
        return median(s.mase for s in self.scores)

    def to_csv(self) -> str:
        lines = ["series_id,smape,mase"]
        for s in sorted(self.scores, key=lambda s: s.series_id):
            lines.append(f"{s.series_id},{s.smape!r},{s.mase!r}")
        return "\n".join(lines) + "\n"

    def aggregate_csv(self) -> str:
        return (
            "method,mean_smape,median_smape,mean_mase,median_mase\n"
            f"{self.method},{self.mean_smape!r},{self.median_smape!r},"
            f"{self.mean_mase!r},{self.median_mase!r}\n"
        )


def aggregate(scores: Iterable[SeriesScore], method: str = "") -> EvalReport:
    """Collect per-series scores into a report; order does not matter."""
    collected = list(scores)
    if not collected:
        raise ValueError("aggregate needs at least one series score")
    return EvalReport(method=method, scores=collected)


def _signed_ranks(diffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mid-ranks of |d| (ties averaged) and the signs, zeros already removed."""
    absd = np.abs(diffs)
    order = np.argsort(absd, kind="stable")
    ranks = np.empty(absd.size, dtype=np.float64)
    sorted_abs = absd[order]
    i = 0
    while i < absd.size:
        j = i
        while j + 1 < absd.size and sorted_abs[j + 1] == sorted_abs[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks, np.sign(diffs)


def wilcoxon_signed_rank(errors_a: Sequence[float], errors_b: Sequence[float]) -> float:
    """Two-sided paired Wilcoxon signed-rank p-value.

    Zero differences are dropped and tied magnitudes share their mid-rank.
    Up to 12 nonzero pairs the null distribution is enumerated exactly
    (p = 2 * min(P(W <= w), P(W >= w)), capped at 1); beyond that a normal
    approximation with tie-corrected variance and continuity correction is
    used. All differences zero gives p = 1.
    """
    a = np.asarray(errors_a, dtype=np.float64)
    b = np.asarray(errors_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ShapeError(f"need equal-length vectors, got {a.shape} and {b.shape}")
    if a.size < 6:
        raise ValueError(f"need at least 6 pairs, got {a.size}")
    diffs = a - b
    diffs = diffs[diffs != 0.0]
    n = diffs.size
    if n == 0:
        return 1.0
    ranks, signs = _signed_ranks(diffs)
    w_plus = float(ranks[signs > 0].sum())

    if n <= 12:
        # exact: distribution of W+ over all 2^n equally likely sign patterns
        totals = np.zeros(1, dtype=np.float64)
        for r in ranks:
            totals = np.concatenate([totals, totals + r])
        count = totals.size
        p_low = np.count_nonzero(totals <= w_plus + 1e-12) / count
        p_high = np.count_nonzero(totals >= w_plus - 1e-12) / count
        return min(1.0, 2.0 * min(p_low, p_high))

    mu = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    _, tie_counts = np.unique(np.abs(diffs), return_counts=True)
    var -= float(np.sum(tie_counts**3 - tie_counts)) / 48.0
    if var <= 0.0:
        return 1.0
    dev = w_plus - mu
    z = (abs(dev) - 0.5) / math.sqrt(var)
    z = max(z, 0.0)
    return min(1.0, math.erfc(z / math.sqrt(2.0)))
