"""Per-series transforms: mean scaling, log stabilization, seasonal decomposition.

The transform order is fixed: divide by the training-region mean, then take
ln(1 + x), then decompose additively. Each step records what it did so the
post-processing inverses are exact.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import TextIO

import numpy as np
from statsmodels.tsa.seasonal import STL

from .errors import DegenerateSeriesError, LengthError
from .panel import Month, TimeSeries, month_range


@dataclass
class ScaleRecord:
    """Per-series scaling state needed to invert the transforms exactly."""

    id: str
    mean_scale: float
    log_offset: float = 0.0

    def __post_init__(self):
        if not self.mean_scale > 0:
            raise ValueError(f"mean_scale must be > 0, got {self.mean_scale}")
        if self.log_offset < 0:
            raise ValueError(f"log_offset must be >= 0, got {self.log_offset}")


@dataclass(frozen=True)
class DecompositionResult:
    """Additive seasonal/trend/remainder components in transformed space."""

    id: str
    seasonal: np.ndarray
    trend: np.ndarray
    remainder: np.ndarray
    period: int

    def __len__(self) -> int:
        return int(self.seasonal.size)

    def reconstruct(self) -> np.ndarray:
        return self.seasonal + self.trend + self.remainder


@dataclass(frozen=True)
class DecompositionConfig:
    """Loess window tuning for the decomposition backend.

    `seasonal_window=None` requests a near-periodic seasonal (one smooth shape
    per sub-cycle, degree-0 loess over a very wide window). `trend_window=None`
    uses 1.5 * period rounded up to the next odd integer.
    """

    seasonal_window: int | None = None
    trend_window: int | None = None
    robustness_iterations: int = 2


def _next_odd(value: float) -> int:
    n = int(np.ceil(value))
    return n if n % 2 == 1 else n + 1


def mean_scale(series: TimeSeries) -> tuple[np.ndarray, ScaleRecord]:
    """Divide by the arithmetic mean so heterogeneous volumes share one model.

    The caller passes the training region only; the mean never sees test data.
    """
    mean = float(np.mean(series.values))
    if mean <= 0.0:
        raise DegenerateSeriesError(f"series {series.id!r} is all zero, cannot mean-scale")
    record = ScaleRecord(id=series.id, mean_scale=mean)
    return series.values / mean, record


def log_stabilize(scaled: np.ndarray, record: ScaleRecord, offset: float = 1.0) -> np.ndarray:
    """Variance-stabilizing ln(offset + x); the offset keeps zero counts legal."""
    scaled = np.asarray(scaled, dtype=np.float64)
    if np.any(scaled < 0):
        raise ValueError("log_stabilize requires non-negative inputs")
    if offset < 0:
        raise ValueError(f"log offset must be >= 0, got {offset}")
    record.log_offset = float(offset)
    return np.log(scaled + offset)


def transform(series: TimeSeries, log_offset: float = 1.0) -> tuple[np.ndarray, ScaleRecord]:
    """mean_scale then log_stabilize, returning the combined record."""
    scaled, record = mean_scale(series)
    return log_stabilize(scaled, record, offset=log_offset), record


def apply_transform(values: np.ndarray, record: ScaleRecord) -> np.ndarray:
    """Forward transform under an already-fitted record: ln(offset + x/mean).

    Unlike transform(), nothing is re-estimated — the stored divisor and
    offset are reused, which is what scenario perturbations need.
    """
    values = np.asarray(values, dtype=np.float64)
    if np.any(values < 0):
        raise ValueError("apply_transform requires non-negative inputs")
    return np.log(values / record.mean_scale + record.log_offset)


def inverse_transform(
    values: np.ndarray, record: ScaleRecord
) -> tuple[np.ndarray, bool]:
    """Exact inverse of log_stabilize o mean_scale: (exp(v) - offset) * mean.

    Negative results (possible when the network undershoots) clamp to zero;
    the returned flag reports whether any clamping happened, because forecast
    counts cannot be negative.
    """
    values = np.asarray(values, dtype=np.float64)
    restored = (np.exp(values) - record.log_offset) * record.mean_scale
    clamped = bool(np.any(restored < 0))
    if clamped:
        restored = np.maximum(restored, 0.0)
    return restored, clamped


def decompose(
    transformed: np.ndarray,
    period: int,
    config: DecompositionConfig = DecompositionConfig(),
    series_id: str = "",
) -> DecompositionResult:
    """Additive seasonal/trend/remainder split of a transformed series.

    Loess-based: the trend comes from locally weighted smoothing, the seasonal
    from per-sub-cycle smoothing with the configured window, and the remainder
    is recomputed as input - seasonal - trend so additivity is exact.
    """
    x = np.asarray(transformed, dtype=np.float64)
    n = x.size
    if n < 2 * period + 1:
        raise LengthError(
            f"decomposition needs at least {2 * period + 1} points, got {n}"
        )
    if config.seasonal_window is None:
        seasonal_window = 10 * n + 1
        seasonal_deg = 0
    else:
        seasonal_window = _next_odd(config.seasonal_window)
        seasonal_deg = 1
    trend_window = (
        _next_odd(1.5 * period) if config.trend_window is None else _next_odd(config.trend_window)
    )
    trend_window = max(trend_window, _next_odd(period + 1))
    fit = STL(
        x,
        period=period,
        seasonal=seasonal_window,
        seasonal_deg=seasonal_deg,
        trend=trend_window,
    ).fit(inner_iter=2, outer_iter=config.robustness_iterations)
    seasonal = np.asarray(fit.seasonal, dtype=np.float64)
    trend = np.asarray(fit.trend, dtype=np.float64)
    remainder = x - seasonal - trend
    return DecompositionResult(
        id=series_id, seasonal=seasonal, trend=trend, remainder=remainder, period=period
    )


def seasonal_strength(d: DecompositionResult) -> float:
    """Fraction of detrended variance explained by the seasonal component.

    1 - Var(remainder) / Var(seasonal + remainder), floored at 0. A score of 1
    means the remainder is identically zero; 0 means no seasonal signal.
    """
    detrended = d.seasonal + d.remainder
    denom = float(np.var(detrended))
    if denom == 0.0:
        return 0.0
    return max(0.0, 1.0 - float(np.var(d.remainder)) / denom)


def seasonal_forecast(d: DecompositionResult, horizon: int) -> np.ndarray:
    """Repeat the last extracted seasonal cycle forward for `horizon` steps.

    Step k after the series end lands on the same sub-cycle phase as index
    n - period + (k mod period), so the output is phase-aligned to the
    calendar month following the series end.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    n = len(d)
    last_cycle = d.seasonal[n - d.period : n]
    reps = int(np.ceil(horizon / d.period))
    return np.tile(last_cycle, reps)[:horizon]


def decomposition_to_csv(
    d: DecompositionResult, start: Month, target: str | TextIO
) -> None:
    stream = open(target, "w", encoding="utf-8", newline="") if isinstance(target, str) else target
    try:
        writer = csv.writer(stream)
        writer.writerow(["month", "seasonal", "trend", "remainder"])
        for month, s, t, r in zip(month_range(start, len(d)), d.seasonal, d.trend, d.remainder):
            writer.writerow([str(month), repr(float(s)), repr(float(t)), repr(float(r))])
    finally:
        if isinstance(target, str):
            stream.close()
