"""Exception hierarchy shared across the package."""


class PanelcastError(Exception):
    """Base class for all errors raised by this package."""


class GapError(PanelcastError):
    """A series is missing one or more calendar months."""

    def __init__(self, series_id: str, month: str):
        self.series_id = series_id
        self.month = month
        super().__init__(f"series {series_id!r} has a gap at {month}")


class DuplicateError(PanelcastError):
    """Two input rows carry the same (series id, month)."""

    def __init__(self, series_id: str, month: str):
        self.series_id = series_id
        self.month = month
        super().__init__(f"duplicate row for series {series_id!r} at {month}")


class LengthError(PanelcastError):
    """A series is too short for the requested operation."""


class DegenerateSeriesError(PanelcastError):
    """A series cannot be scaled (e.g. all observations are zero)."""


class DegenerateScaleError(PanelcastError):
    """A scaling denominator is exactly zero."""


class ShapeError(PanelcastError):
    """Vector lengths or array shapes do not agree."""


class NumericalError(PanelcastError):
    """A non-finite value appeared where finite arithmetic was required."""


class EmptyTrainingError(PanelcastError):
    """No training windows were available for a model."""


class NotFittedError(PanelcastError):
    """A forecast was requested for a series the model has never seen."""


class ConfigError(PanelcastError):
    """Inconsistent or out-of-contract configuration."""


class NoExogenousError(PanelcastError):
    """A scenario names an exogenous channel the model was not fitted with."""
