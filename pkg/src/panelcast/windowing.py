"""Moving-window transform: slicing series into (input frame, output frame)
training pairs, plus the per-window level normalization and its inverse."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import LengthError, NumericalError, ShapeError

PRIMARY_CHANNEL = "value"
SEASONAL_CHANNEL = "seasonal"


class Paradigm(str, enum.Enum):
    # DS: train on the deseasonalized series, add the seasonal cycle back later.
    # SE: train on the full series with the seasonal component as an input channel.
    DS = "ds"
    SE = "se"


@dataclass(frozen=True)
class WindowSpec:
    """Geometry of the moving-window transform."""

    input_size: int = 15
    output_size: int = 12
    stride: int = 1
    paradigm: Paradigm = Paradigm.DS

    def __post_init__(self):
        if self.input_size < 1 or self.output_size < 1 or self.stride < 1:
            raise ValueError("input_size, output_size and stride must all be >= 1")
        object.__setattr__(self, "paradigm", Paradigm(self.paradigm))

    @classmethod
    def for_horizon(cls, horizon: int, paradigm: Paradigm, stride: int = 1) -> "WindowSpec":
        """Default input width is 1.25x the horizon, rounded up."""
        return cls(
            input_size=math.ceil(1.25 * horizon),
            output_size=horizon,
            stride=stride,
            paradigm=paradigm,
        )


@dataclass(frozen=True)
class TrainingWindow:
    """One (input frame, output frame) pair with its normalization record.

    `input` is input_size x channels; `target` holds the output_size values
    immediately following the input frame, primary channel only. `offset` is
    the absolute index of the first input step in the source series.
    """

    series_id: str
    offset: int
    input: np.ndarray
    target: np.ndarray
    channel_layout: tuple[str, ...]
    norm_value: float = 0.0

    def __post_init__(self):
        if self.input.ndim != 2 or self.input.shape[1] != len(self.channel_layout):
            raise ShapeError(
                f"input shape {self.input.shape} does not match layout {self.channel_layout}"
            )
        if not np.isfinite(self.norm_value):
            raise NumericalError(f"norm_value is not finite for {self.series_id!r}")


def window_count(n: int, spec: WindowSpec) -> int:
    usable = n - spec.input_size - spec.output_size
    if usable < 0:
        return 0
    return usable // spec.stride + 1


def _stack_channels(
    primary: np.ndarray,
    spec: WindowSpec,
    seasonal: np.ndarray | None,
    exogenous: dict[str, np.ndarray] | None,
) -> tuple[np.ndarray, tuple[str, ...]]:
    channels = [np.asarray(primary, dtype=np.float64)]
    layout = [PRIMARY_CHANNEL]
    if spec.paradigm is Paradigm.SE:
        if seasonal is None:
            raise ValueError("SE windows need the seasonal component as a channel")
        channels.append(np.asarray(seasonal, dtype=np.float64))
        layout.append(SEASONAL_CHANNEL)
    for name, values in (exogenous or {}).items():
        channels.append(np.asarray(values, dtype=np.float64))
        layout.append(name)
    n = channels[0].size
    for values, name in zip(channels, layout):
        if values.ndim != 1 or values.size != n:
            raise ShapeError(f"channel {name!r} length {values.size} != series length {n}")
    return np.column_stack(channels), tuple(layout)


def make_windows(
    series_id: str,
    primary: np.ndarray,
    spec: WindowSpec,
    seasonal: np.ndarray | None = None,
    exogenous: dict[str, np.ndarray] | None = None,
) -> list[TrainingWindow]:
    """Slice a model-space series into overlapping training windows.

    For DS, `primary` is the deseasonalized series and `seasonal` is unused.
    For SE, `primary` is the transformed series and the matching seasonal
    values ride along as an extra input channel. Targets carry only the
    primary channel: the network never sees future seasonal or exogenous
    values.
    """
    matrix, layout = _stack_channels(primary, spec, seasonal, exogenous)
    n = matrix.shape[0]
    count = window_count(n, spec)
    if count == 0:
        raise LengthError(
            f"series {series_id!r}: {n} points cannot fit input {spec.input_size} "
            f"+ output {spec.output_size}"
        )
    windows = []
    for k in range(count):
        off = k * spec.stride
        windows.append(
            TrainingWindow(
                series_id=series_id,
                offset=off,
                input=matrix[off : off + spec.input_size],
                target=matrix[off + spec.input_size : off + spec.input_size + spec.output_size, 0],
                channel_layout=layout,
            )
        )
    return windows


def _normalized_input(
    input_frame: np.ndarray, layout: tuple[str, ...], norm_value: float
) -> np.ndarray:
    out = input_frame.astype(np.float64).copy()
    # only the primary channel carries the local level shift; the seasonal
    # channel is already centered by the decomposition, and exogenous
    # channels keep their (globally mean-scaled) level so that scenario
    # perturbations of that level actually reach the network
    out[:, 0] -= norm_value
    return out


def window_norm_value(
    input_frame: np.ndarray,
    paradigm: Paradigm,
    trend: np.ndarray | None,
    offset: int,
    input_size: int,
) -> float:
    if paradigm is Paradigm.DS:
        if trend is None:
            raise ValueError("DS normalization needs the trend component")
        value = float(trend[offset + input_size - 1])
    else:
        value = float(np.mean(input_frame[:, 0]))
    if not np.isfinite(value):
        raise NumericalError(f"normalization value is not finite at offset {offset}")
    return value


def local_normalize(
    w: TrainingWindow, trend: np.ndarray | None, paradigm: Paradigm
) -> TrainingWindow:
    """Remove the window's local level before the network sees it.

    DS subtracts the trend value at the last input step; SE subtracts the mean
    of the input window's primary channel. The shift applies only to the
    primary input channel and the target, and is stored for exact inversion;
    seasonal and exogenous channels pass through unshifted.
    """
    nv = window_norm_value(w.input, paradigm, trend, w.offset, w.input.shape[0])
    return replace(
        w,
        input=_normalized_input(w.input, w.channel_layout, nv),
        target=w.target - nv,
        norm_value=nv,
    )


def denormalize(forecast: np.ndarray, norm_value: float) -> np.ndarray:
    """Exact inverse of the local normalization shift."""
    return np.asarray(forecast, dtype=np.float64) + norm_value


def inference_frame(
    series_id: str,
    primary: np.ndarray,
    spec: WindowSpec,
    seasonal: np.ndarray | None = None,
    exogenous: dict[str, np.ndarray] | None = None,
    trend: np.ndarray | None = None,
) -> tuple[np.ndarray, float, tuple[str, ...]]:
    """Build the normalized conditioning window from the series tail.

    Returns (input matrix, norm_value, channel layout) for the last
    `spec.input_size` steps, normalized with the same rule training used.
    """
    matrix, layout = _stack_channels(primary, spec, seasonal, exogenous)
    n = matrix.shape[0]
    if n < spec.input_size:
        raise LengthError(
            f"series {series_id!r}: {n} points cannot fill a {spec.input_size}-step input"
        )
    offset = n - spec.input_size
    frame = matrix[offset:]
    nv = window_norm_value(frame, spec.paradigm, trend, offset, spec.input_size)
    return _normalized_input(frame, layout, nv), nv, layout
