"""Deterministic synthetic-panel generator.

Each series is max(0, round(base + slope*t + amplitude*pattern(t mod S)
+ beta*Z_{t-L} + noise)) where pattern is a per-series smooth cycle built
from two random harmonics and Z is an optional white count driver emitted
as an aligned exogenous series. Everything is a pure function of the spec.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .panel import Month, Panel, TimeSeries


@dataclass(frozen=True)
class DriverSpec:
    """Optional exogenous driver: Y_t picks up beta * Z_{t-lag}.

    Z fluctuates around `level` with stationary spread `std`; `rho` sets
    AR(1) persistence (0 = white, near 1 = slowly wandering, like a count
    of active licenses). Values are rounded to non-negative counts.
    Pre-sample draws cover the first `lag` months so the emitted driver
    spans exactly the panel months.
    """

    name: str = "driver"
    lag: int = 1
    beta: float = 0.0
    level: float = 30.0
    std: float = 8.0
    rho: float = 0.0

    def __post_init__(self):
        if self.lag < 0:
            raise ValueError("lag must be >= 0")
        if self.std < 0 or self.level < 0:
            raise ValueError("driver level and std must be >= 0")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError(f"rho must be in [0, 1), got {self.rho}")
        if not self.name:
            raise ValueError("driver needs a name")


@dataclass(frozen=True)
class SynthSpec:
    n_series: int = 40
    n_months: int = 96
    base_range: tuple[float, float] = (20.0, 60.0)
    slope_range: tuple[float, float] = (-0.15, 0.25)
    amplitude_range: tuple[float, float] = (3.0, 10.0)
    noise_std: float = 1.0
    period: int = 12
    driver: DriverSpec | None = None
    category_sizes: dict[str, int] | None = None
    master_seed: int = 0
    start: Month = Month(2011, 9)

    def __post_init__(self):
        if self.n_series < 1:
            raise ValueError("need at least one series")
        if self.n_months < 2 * self.period + 24:
            raise ValueError(
                f"{self.n_months} months is too short: need two seasonal cycles "
                "plus validation and test room"
            )
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        if self.category_sizes is not None and sum(self.category_sizes.values()) != self.n_series:
            raise ValueError("category sizes must sum to n_series")


def _categories(spec: SynthSpec) -> list[str]:
    if spec.category_sizes is None:
        return ["cat0"] * spec.n_series
    out: list[str] = []
    for name, size in spec.category_sizes.items():
        out.extend([name] * size)
    return out


def _cycle_pattern(rng: np.random.Generator, period: int) -> np.ndarray:
    """Smooth per-series seasonal shape from two harmonics, peak-scaled to 1."""
    tau = np.arange(period)
    a1 = rng.uniform(0.5, 1.0)
    a2 = rng.uniform(0.2, 0.7)
    p1 = rng.uniform(0.0, period)
    p2 = rng.uniform(0.0, period)
    shape = a1 * np.sin(2 * np.pi * (tau + p1) / period) + a2 * np.sin(
        4 * np.pi * (tau + p2) / period
    )
    peak = np.max(np.abs(shape))
    return shape / peak if peak > 0 else shape


def generate(spec: SynthSpec) -> Panel:
    """Build the panel (and aligned exogenous map when a driver is set)."""
    rng = np.random.default_rng(spec.master_seed)
    width = max(3, len(str(spec.n_series - 1)))
    categories = _categories(spec)
    t = np.arange(spec.n_months)

    series: dict[str, TimeSeries] = {}
    exo: dict[str, TimeSeries] = {}
    for idx in range(spec.n_series):
        sid = f"s{idx:0{width}d}"
        base = rng.uniform(*spec.base_range)
        slope = rng.uniform(*spec.slope_range)
        amplitude = rng.uniform(*spec.amplitude_range)
        pattern = _cycle_pattern(rng, spec.period)

        level = base + slope * t + amplitude * pattern[t % spec.period]
        if spec.driver is not None:
            d = spec.driver
            shocks = rng.standard_normal(spec.n_months + d.lag)
            if d.rho > 0.0:
                x = np.empty_like(shocks)
                x[0] = shocks[0]
                innov = math.sqrt(1.0 - d.rho**2)
                for t in range(1, shocks.size):
                    x[t] = d.rho * x[t - 1] + innov * shocks[t]
            else:
                x = shocks
            z_full = np.maximum(0.0, np.round(d.level + d.std * x))
            level = level + d.beta * z_full[: spec.n_months]
            exo[sid] = TimeSeries(sid, categories[idx], spec.start, z_full[d.lag :])
        level = level + spec.noise_std * rng.standard_normal(spec.n_months)
        values = np.maximum(0.0, np.round(level))
        series[sid] = TimeSeries(sid, categories[idx], spec.start, values)

    exogenous = {spec.driver.name: exo} if spec.driver is not None else {}
    return Panel(series=series, exogenous=exogenous, frequency=spec.period)
