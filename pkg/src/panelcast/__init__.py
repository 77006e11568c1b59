"""Global forecasting and scenario analysis for panels of monthly counts.

One shared network is trained across the whole panel (or per category); a
decomposition stage handles seasonality either by removing it before training
or by exposing it as an input channel. On top of the forecaster sit a
driver-screening comparison and a what-if engine that re-forecasts under
perturbed exogenous conditioning.
"""

from .causal import CAVEAT, GCReport, Scenario, WhatIfResult, gc_compare, whatif
from .errors import (
    ConfigError,
    DegenerateScaleError,
    DegenerateSeriesError,
    DuplicateError,
    EmptyTrainingError,
    GapError,
    LengthError,
    NoExogenousError,
    NotFittedError,
    NumericalError,
    PanelcastError,
    ShapeError,
)
from .metrics import (
    EvalReport,
    SeriesScore,
    aggregate,
    mase,
    seasonal_naive,
    smape,
    wilcoxon_signed_rank,
)
from .network import GradientCheckReport, NetworkConfig, gradient_check
from .panel import (
    Month,
    Panel,
    SplitSpec,
    TimeSeries,
    load_exogenous,
    load_panel,
    merge_panels,
    split,
    write_exogenous_csv,
    write_panel_csv,
)
from .pipeline import (
    ForecastBundle,
    Grouping,
    HyperparameterBounds,
    PipelineConfig,
    TrainedModel,
    fit,
    forecast,
    hyperparameter_search,
    load_model,
    save_model,
)
from .preprocess import (
    DecompositionResult,
    ScaleRecord,
    decompose,
    inverse_transform,
    seasonal_strength,
    transform,
)
from .synth import DriverSpec, SynthSpec, generate
from .windowing import Paradigm, WindowSpec, make_windows, window_count

__version__ = "0.1.0"

__all__ = [
    "CAVEAT",
    "ConfigError",
    "DecompositionResult",
    "DegenerateScaleError",
    "DegenerateSeriesError",
    "DriverSpec",
    "DuplicateError",
    "EmptyTrainingError",
    "EvalReport",
    "ForecastBundle",
    "GCReport",
    "GapError",
    "GradientCheckReport",
    "Grouping",
    "HyperparameterBounds",
    "LengthError",
    "Month",
    "NetworkConfig",
    "NoExogenousError",
    "NotFittedError",
    "NumericalError",
    "Panel",
    "PanelcastError",
    "Paradigm",
    "PipelineConfig",
    "ScaleRecord",
    "Scenario",
    "SeriesScore",
    "ShapeError",
    "SplitSpec",
    "SynthSpec",
    "TimeSeries",
    "TrainedModel",
    "WhatIfResult",
    "WindowSpec",
    "aggregate",
    "decompose",
    "fit",
    "forecast",
    "gc_compare",
    "generate",
    "gradient_check",
    "hyperparameter_search",
    "inverse_transform",
    "load_exogenous",
    "load_model",
    "load_panel",
    "make_windows",
    "mase",
    "merge_panels",
    "save_model",
    "seasonal_naive",
    "seasonal_strength",
    "smape",
    "split",
    "transform",
    "whatif",
    "wilcoxon_signed_rank",
    "window_count",
    "write_exogenous_csv",
    "write_panel_csv",
]
