"""Shared fixtures: tiny deterministic panels and a fast pipeline config.

Unit tests use deliberately small networks (a handful of cells, one or two
epochs) because they check mechanics, not accuracy. The acceptance gates in
test_acceptance.py own the expensive, realistic configurations.
"""

import numpy as np
import pytest

from panelcast import (
    NetworkConfig,
    Panel,
    PipelineConfig,
    SynthSpec,
    TimeSeries,
    WindowSpec,
    generate,
)
from panelcast.panel import Month


def small_network(**overrides) -> NetworkConfig:
    base = dict(
        cell_dimension=8,
        hidden_layers=1,
        minibatch_size=4,
        epoch_size=2,
        max_epochs=3,
        gaussian_noise_std=3e-4,
        init_std=4e-4,
        l2_weight=2e-4,
        seed=0,
    )
    base.update(overrides)
    return NetworkConfig(**base)


def quick_config(paradigm="ds", **overrides) -> PipelineConfig:
    network = overrides.pop("network", small_network())
    base = dict(
        paradigm=paradigm,
        grouping="all",
        window=WindowSpec(input_size=15, output_size=12, stride=1),
        network=network,
        ensemble_seeds=1,
    )
    base.update(overrides)
    return PipelineConfig(**base)


def series_from(values, sid="s0", category="c0", start=Month(2015, 1)) -> TimeSeries:
    return TimeSeries(
        id=sid, category=category, start=start,
        values=np.asarray(values, dtype=np.float64),
    )


@pytest.fixture(scope="session")
def tiny_panel() -> Panel:
    """6 series x 48 months, two categories, no driver. Enough for 2 windows
    past the decomposition minimum, cheap enough for every unit test."""
    return generate(SynthSpec(
        n_series=6, n_months=48,
        category_sizes={"ao": 3, "sa": 3},
        master_seed=42,
    ))


@pytest.fixture(scope="session")
def driver_panel() -> Panel:
    """8 series x 60 months with a lag-1 driver baked into the levels."""
    from panelcast import DriverSpec

    return generate(SynthSpec(
        n_series=8, n_months=60,
        driver=DriverSpec(name="driver", lag=1, beta=1.0, level=30.0, std=8.0),
        master_seed=7,
    ))
