"""End-to-end orchestration: preprocessing, paradigm-specific windowing,
global per-group training, multi-seed median ensembling, exact post-processing
back to count scale, model persistence, and hyper-parameter search.

A fitted model is self-contained: it stores, per series, the transform
records and the conditioning tail it will forecast from, so forecasting never
reads months beyond the fit-time training region.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import (
    ConfigError,
    EmptyTrainingError,
    LengthError,
    NoExogenousError,
    NotFittedError,
)
from .network import NetworkConfig, NetworkParameters, forward, init, train
from .panel import Month, Panel, SplitSpec, TimeSeries, split
from .preprocess import (
    ScaleRecord,
    decompose,
    inverse_transform,
    mean_scale,
    transform,
)
from .windowing import (
    PRIMARY_CHANNEL,
    SEASONAL_CHANNEL,
    Paradigm,
    TrainingWindow,
    WindowSpec,
    inference_frame,
    local_normalize,
    make_windows,
)

MODEL_FORMAT = "panelcast-model/1"


class Grouping(str, enum.Enum):
    CAT = "cat"
    ALL = "all"


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a fit needs. The paradigm here is authoritative; the window
    spec is aligned to it before any slicing happens."""

    paradigm: Paradigm = Paradigm.DS
    grouping: Grouping = Grouping.ALL
    window: WindowSpec = WindowSpec()
    network: NetworkConfig = NetworkConfig()
    ensemble_seeds: int = 10
    exogenous_names: tuple[str, ...] = ()

    def __post_init__(self):
        if self.ensemble_seeds < 1:
            raise ConfigError(f"ensemble_seeds must be >= 1, got {self.ensemble_seeds}")
        object.__setattr__(self, "paradigm", Paradigm(self.paradigm))
        object.__setattr__(self, "grouping", Grouping(self.grouping))
        object.__setattr__(self, "exogenous_names", tuple(self.exogenous_names))
        object.__setattr__(self, "window", replace(self.window, paradigm=self.paradigm))

    @property
    def seeds(self) -> tuple[int, ...]:
        """Per-member training seeds, derived from the master network seed."""
        return tuple(self.network.seed + k for k in range(self.ensemble_seeds))


@dataclass
class SeriesRecord:
    """Per-series state frozen at fit time: inversion records plus the
    conditioning tail (in model space) the forecaster reads."""

    id: str
    category: str
    group: str
    scale: ScaleRecord
    train_start: Month
    train_length: int
    primary_tail: np.ndarray            # last input_size model-space values
    seasonal_tail: np.ndarray           # last max(input_size, period) seasonal values
    trend_last: float
    exo_raw_tail: dict[str, np.ndarray] = field(default_factory=dict)
    exo_scales: dict[str, ScaleRecord] = field(default_factory=dict)

    @property
    def train_end(self) -> Month:
        return self.train_start.shift(self.train_length - 1)


@dataclass
class GroupModel:
    name: str
    seeds: tuple[int, ...]
    params: dict[int, NetworkParameters]


@dataclass
class TrainedModel:
    config: PipelineConfig
    frequency: int
    channel_layout: tuple[str, ...]
    groups: dict[str, GroupModel]
    series: dict[str, SeriesRecord]
    skipped: dict[str, str] = field(default_factory=dict)

    def group_of(self, series_id: str) -> GroupModel:
        rec = self.series.get(series_id)
        if rec is None:
            raise NotFittedError(f"series {series_id!r} was not seen at fit time")
        return self.groups[rec.group]


@dataclass
class SeriesForecast:
    """Per-seed and ensembled forecasts for one series, in count scale."""

    series_id: str
    months: list[Month]
    per_seed: np.ndarray                # n_seeds x horizon
    ensemble: np.ndarray                # horizon
    seeds: tuple[int, ...]
    paradigm: Paradigm
    grouping: Grouping
    scale: ScaleRecord
    norm_value: float
    clamped: bool


@dataclass
class ForecastBundle:
    horizon: int
    paradigm: Paradigm
    grouping: Grouping
    seeds: tuple[int, ...]
    series: dict[str, SeriesForecast]


def _group_name(config: PipelineConfig, series: TimeSeries) -> str:
    return series.category if config.grouping is Grouping.CAT else "all"


def _exogenous_channels(
    panel: Panel, sid: str, names: tuple[str, ...]
) -> dict[str, TimeSeries]:
    out: dict[str, TimeSeries] = {}
    for name in names:
        channel = panel.exogenous.get(name, {})
        if sid not in channel:
            raise NoExogenousError(f"series {sid!r} has no exogenous channel {name!r}")
        out[name] = channel[sid]
    return out


def _prepare_series(
    panel: Panel, sid: str, config: PipelineConfig
) -> tuple[SeriesRecord, list[TrainingWindow]]:
    """Transform, decompose, window, and locally normalize one series."""
    ts = panel.series[sid]
    spec = config.window
    period = panel.frequency
    transformed, record = transform(ts)
    decomp = decompose(transformed, period, series_id=sid)

    if config.paradigm is Paradigm.DS:
        primary = transformed - decomp.seasonal
        seasonal_channel = None
    else:
        primary = transformed
        seasonal_channel = decomp.seasonal

    # exogenous channels get their own mean scaling but no log and no local
    # shift: their level must survive so what-if multipliers have an effect
    exo_series = _exogenous_channels(panel, sid, config.exogenous_names)
    exo_model: dict[str, np.ndarray] = {}
    exo_scales: dict[str, ScaleRecord] = {}
    for name, exo in exo_series.items():
        exo_model[name], exo_scales[name] = mean_scale(exo)

    windows = make_windows(sid, primary, spec, seasonal=seasonal_channel, exogenous=exo_model)
    windows = [local_normalize(w, decomp.trend, config.paradigm) for w in windows]

    tail = spec.input_size
    rec = SeriesRecord(
        id=sid,
        category=ts.category,
        group=_group_name(config, ts),
        scale=record,
        train_start=ts.start,
        train_length=len(ts),
        primary_tail=primary[-tail:].copy(),
        seasonal_tail=decomp.seasonal[-max(tail, period):].copy(),
        trend_last=float(decomp.trend[-1]),
        exo_raw_tail={name: exo.values[-tail:].copy() for name, exo in exo_series.items()},
        exo_scales=exo_scales,
    )
    return rec, windows


def fit(panel: Panel, config: PipelineConfig) -> TrainedModel:
    """Train one network per (group, ensemble seed) over the pooled windows.

    Series too short to decompose or window are skipped with a recorded
    reason; a group whose every series is skipped raises EmptyTrainingError.
    """
    for name in config.exogenous_names:
        if name not in panel.exogenous:
            raise NoExogenousError(f"panel has no exogenous channel {name!r}")

    records: dict[str, SeriesRecord] = {}
    skipped: dict[str, str] = {}
    group_windows: dict[str, list[TrainingWindow]] = {}
    group_members: dict[str, int] = {}
    for sid, ts in panel.series.items():
        gname = _group_name(config, ts)
        group_members[gname] = group_members.get(gname, 0) + 1
        try:
            rec, windows = _prepare_series(panel, sid, config)
        except LengthError as err:
            skipped[sid] = str(err)
            continue
        records[sid] = rec
        group_windows.setdefault(gname, []).append(windows)

    layout = _layout(config)
    groups: dict[str, GroupModel] = {}
    for gname in sorted(group_members):
        pools = group_windows.get(gname, [])
        if not pools:
            raise EmptyTrainingError(f"group {gname!r} has no usable series")
        pool = [w for ws in pools for w in ws]
        params: dict[int, NetworkParameters] = {}
        for seed in config.seeds:
            params[seed] = train(pool, replace(config.network, seed=seed))
        groups[gname] = GroupModel(name=gname, seeds=config.seeds, params=params)
    return TrainedModel(
        config=config,
        frequency=panel.frequency,
        channel_layout=layout,
        groups=groups,
        series=records,
        skipped=skipped,
    )


def _layout(config: PipelineConfig) -> tuple[str, ...]:
    layout = [PRIMARY_CHANNEL]
    if config.paradigm is Paradigm.SE:
        layout.append(SEASONAL_CHANNEL)
    layout.extend(config.exogenous_names)
    return tuple(layout)


def postprocess_forecast(
    network_output: np.ndarray,
    norm_value: float,
    seasonal_future: np.ndarray | None,
    record: ScaleRecord,
) -> tuple[np.ndarray, bool]:
    """Invert the pipeline exactly: add back the local level, reseasonalize
    (DS only; pass None for SE), then undo the log and mean scaling."""
    values = np.asarray(network_output, dtype=np.float64) + norm_value
    if seasonal_future is not None:
        values = values + np.asarray(seasonal_future, dtype=np.float64)
    return inverse_transform(values, record)


def _seasonal_future(rec: SeriesRecord, period: int, horizon: int) -> np.ndarray:
    cycle = rec.seasonal_tail[-period:]
    return cycle[np.arange(horizon) % period]


def _infer_series(
    model: TrainedModel,
    rec: SeriesRecord,
    horizon: int,
    exo_multipliers: dict[str, float] | None = None,
) -> SeriesForecast:
    """Forecast one series from its stored tail, optionally perturbing raw
    exogenous conditioning values before their (fixed) transform."""
    config = model.config
    spec = config.window
    m_in = spec.input_size
    period = model.frequency

    exo_model: dict[str, np.ndarray] = {}
    for name in config.exogenous_names:
        raw = rec.exo_raw_tail[name]
        if exo_multipliers and name in exo_multipliers:
            raw = raw * exo_multipliers[name]
        exo_model[name] = raw / rec.exo_scales[name].mean_scale

    seasonal = rec.seasonal_tail[-m_in:] if config.paradigm is Paradigm.SE else None
    trend = np.full(m_in, rec.trend_last) if config.paradigm is Paradigm.DS else None
    frame, norm_value, _ = inference_frame(
        rec.id, rec.primary_tail, spec,
        seasonal=seasonal, exogenous=exo_model, trend=trend,
    )

    seasonal_future = (
        _seasonal_future(rec, period, spec.output_size)
        if config.paradigm is Paradigm.DS
        else None
    )
    group = model.groups[rec.group]
    per_seed = np.empty((len(group.seeds), horizon))
    clamped = False
    for row, seed in enumerate(group.seeds):
        raw_pred, _ = forward(group.params[seed], frame)
        restored, did_clamp = postprocess_forecast(
            raw_pred, norm_value, seasonal_future, rec.scale
        )
        per_seed[row] = restored[:horizon]
        clamped = clamped or did_clamp

    ensemble = np.median(per_seed, axis=0)
    months = [rec.train_end.shift(k + 1) for k in range(horizon)]
    return SeriesForecast(
        series_id=rec.id,
        months=months,
        per_seed=per_seed,
        ensemble=ensemble,
        seeds=group.seeds,
        paradigm=config.paradigm,
        grouping=config.grouping,
        scale=rec.scale,
        norm_value=norm_value,
        clamped=clamped,
    )


def forecast(model: TrainedModel, panel: Panel, horizon: int) -> ForecastBundle:
    """Forecast every panel series `horizon` months past its training region.

    Conditioning always uses the fit-time tail, so passing a panel that
    already contains post-training months cannot leak them. The horizon is
    capped by the trained output size: longer horizons need a refit (the
    network emits its whole horizon in one shot, never recursively).
    """
    if horizon < 1:
        raise ConfigError(f"horizon must be >= 1, got {horizon}")
    if horizon > model.config.window.output_size:
        raise ConfigError(
            f"horizon {horizon} exceeds the trained output size "
            f"{model.config.window.output_size}; refit with a larger window"
        )
    out: dict[str, SeriesForecast] = {}
    for sid in panel.series:
        rec = model.series.get(sid)
        if rec is None:
            raise NotFittedError(f"series {sid!r} was not seen at fit time")
        out[sid] = _infer_series(model, rec, horizon)
    return ForecastBundle(
        horizon=horizon,
        paradigm=model.config.paradigm,
        grouping=model.config.grouping,
        seeds=model.config.seeds,
        series=out,
    )


# ---------------------------------------------------------------------------
# persistence

def _pack(params: NetworkParameters) -> np.ndarray:
    pieces = []
    for layer in range(params.hidden_layers):
        for part in ("wx", "wh", "b"):
            pieces.append(params.blocks[f"layer{layer}.{part}"].ravel())
    pieces.append(params.blocks["head"].ravel())
    return np.concatenate(pieces)


def _unpack(
    vector: np.ndarray, cell: int, layers: int, channels: int, horizon: int
) -> NetworkParameters:
    blocks: dict[str, np.ndarray] = {}
    pos = 0
    c_in = channels
    for layer in range(layers):
        for part, shape in (
            ("wx", (c_in, 4 * cell)),
            ("wh", (cell, 4 * cell)),
            ("b", (4 * cell,)),
        ):
            size = int(np.prod(shape))
            blocks[f"layer{layer}.{part}"] = vector[pos : pos + size].reshape(shape)
            pos += size
        c_in = cell
    blocks["head"] = vector[pos : pos + cell * horizon].reshape(cell, horizon)
    pos += cell * horizon
    if pos != vector.size:
        raise ConfigError(f"parameter file holds {vector.size} values, expected {pos}")
    return NetworkParameters(
        blocks=blocks,
        cell_dimension=cell,
        hidden_layers=layers,
        input_channels=channels,
        horizon=horizon,
    )


def _config_to_json(config: PipelineConfig) -> dict:
    return {
        "paradigm": config.paradigm.value,
        "grouping": config.grouping.value,
        "window": {
            "input_size": config.window.input_size,
            "output_size": config.window.output_size,
            "stride": config.window.stride,
        },
        "network": {
            "cell_dimension": config.network.cell_dimension,
            "hidden_layers": config.network.hidden_layers,
            "minibatch_size": config.network.minibatch_size,
            "epoch_size": config.network.epoch_size,
            "max_epochs": config.network.max_epochs,
            "gaussian_noise_std": config.network.gaussian_noise_std,
            "init_std": config.network.init_std,
            "l2_weight": config.network.l2_weight,
            "seed": config.network.seed,
        },
        "ensemble_seeds": config.ensemble_seeds,
        "exogenous_names": list(config.exogenous_names),
    }


def config_from_json(data: dict) -> PipelineConfig:
    return PipelineConfig(
        paradigm=Paradigm(data["paradigm"]),
        grouping=Grouping(data["grouping"]),
        window=WindowSpec(
            input_size=data["window"]["input_size"],
            output_size=data["window"]["output_size"],
            stride=data["window"]["stride"],
            paradigm=Paradigm(data["paradigm"]),
        ),
        network=NetworkConfig(**data["network"]),
        ensemble_seeds=data["ensemble_seeds"],
        exogenous_names=tuple(data["exogenous_names"]),
    )


def _record_to_json(rec: SeriesRecord) -> dict:
    return {
        "id": rec.id,
        "category": rec.category,
        "group": rec.group,
        "mean_scale": rec.scale.mean_scale,
        "log_offset": rec.scale.log_offset,
        "train_start": str(rec.train_start),
        "train_length": rec.train_length,
        "primary_tail": [float(v) for v in rec.primary_tail],
        "seasonal_tail": [float(v) for v in rec.seasonal_tail],
        "trend_last": rec.trend_last,
        "exo_raw_tail": {k: [float(v) for v in arr] for k, arr in rec.exo_raw_tail.items()},
        "exo_scales": {
            k: {"mean_scale": s.mean_scale, "log_offset": s.log_offset}
            for k, s in rec.exo_scales.items()
        },
    }


def _record_from_json(data: dict) -> SeriesRecord:
    return SeriesRecord(
        id=data["id"],
        category=data["category"],
        group=data["group"],
        scale=ScaleRecord(
            id=data["id"], mean_scale=data["mean_scale"], log_offset=data["log_offset"]
        ),
        train_start=Month.parse(data["train_start"]),
        train_length=data["train_length"],
        primary_tail=np.array(data["primary_tail"], dtype=np.float64),
        seasonal_tail=np.array(data["seasonal_tail"], dtype=np.float64),
        trend_last=data["trend_last"],
        exo_raw_tail={
            k: np.array(v, dtype=np.float64) for k, v in data["exo_raw_tail"].items()
        },
        exo_scales={
            k: ScaleRecord(id=data["id"], mean_scale=s["mean_scale"], log_offset=s["log_offset"])
            for k, s in data["exo_scales"].items()
        },
    )


def _safe_name(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "-" for c in name)


def save_model(model: TrainedModel, directory: str | Path) -> Path:
    """Write the manifest plus one flat parameter file per (group, seed).

    Parameter files are raw float64 .npy vectors (stable byte layout: two
    runs of the same fit produce bit-identical files). The manifest holds
    every scalar, record, and tail as JSON; floats survive the round trip
    exactly because repr-based serialization is shortest-exact.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    groups_json: dict[str, dict] = {}
    for gname in sorted(model.groups):
        group = model.groups[gname]
        files: dict[str, str] = {}
        for seed in group.seeds:
            fname = f"params_{_safe_name(gname)}_seed{seed}.npy"
            np.save(directory / fname, _pack(group.params[seed]))
            files[str(seed)] = fname
        sample = group.params[group.seeds[0]]
        groups_json[gname] = {
            "seeds": list(group.seeds),
            "cell_dimension": sample.cell_dimension,
            "hidden_layers": sample.hidden_layers,
            "input_channels": sample.input_channels,
            "horizon": sample.horizon,
            "files": files,
        }
    manifest = {
        "format": MODEL_FORMAT,
        "config": _config_to_json(model.config),
        "frequency": model.frequency,
        "channel_layout": list(model.channel_layout),
        "groups": groups_json,
        "series": {sid: _record_to_json(rec) for sid, rec in sorted(model.series.items())},
        "skipped": dict(sorted(model.skipped.items())),
    }
    with open(directory / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return directory


def load_model(directory: str | Path) -> TrainedModel:
    directory = Path(directory)
    with open(directory / "manifest.json") as fh:
        manifest = json.load(fh)
    if manifest.get("format") != MODEL_FORMAT:
        raise ConfigError(f"unrecognized model format {manifest.get('format')!r}")
    config = config_from_json(manifest["config"])
    groups: dict[str, GroupModel] = {}
    for gname, gdata in manifest["groups"].items():
        params: dict[int, NetworkParameters] = {}
        for seed_str, fname in gdata["files"].items():
            vector = np.load(directory / fname)
            params[int(seed_str)] = _unpack(
                vector,
                gdata["cell_dimension"],
                gdata["hidden_layers"],
                gdata["input_channels"],
                gdata["horizon"],
            )
        groups[gname] = GroupModel(
            name=gname, seeds=tuple(gdata["seeds"]), params=params
        )
    series = {sid: _record_from_json(d) for sid, d in manifest["series"].items()}
    return TrainedModel(
        config=config,
        frequency=manifest["frequency"],
        channel_layout=tuple(manifest["channel_layout"]),
        groups=groups,
        series=series,
        skipped=dict(manifest.get("skipped", {})),
    )


# ---------------------------------------------------------------------------
# hyper-parameter search

@dataclass(frozen=True)
class HyperparameterBounds:
    """Search space: integers sampled uniform inclusive, reals log-uniform."""

    cell_dimension: tuple[int, int] = (20, 50)
    minibatch_size: tuple[int, int] = (1, 10)
    epoch_size: tuple[int, int] = (2, 10)
    max_epochs: tuple[int, int] = (3, 40)
    hidden_layers: tuple[int, int] = (1, 2)
    gaussian_noise_std: tuple[float, float] = (1e-4, 8e-4)
    init_std: tuple[float, float] = (1e-4, 8e-4)
    l2_weight: tuple[float, float] = (1e-4, 8e-4)

    def contains(self, config: NetworkConfig) -> bool:
        def inside(v, lo_hi):
            return lo_hi[0] <= v <= lo_hi[1]

        return all(
            inside(getattr(config, name), getattr(self, name))
            for name in (
                "cell_dimension", "minibatch_size", "epoch_size", "max_epochs",
                "hidden_layers", "gaussian_noise_std", "init_std", "l2_weight",
            )
        )


def sample_configs(
    bounds: HyperparameterBounds, trials: int, master_seed: int, train_seed: int = 0
) -> list[NetworkConfig]:
    """The search's trial stream, exposed so tests can audit the bounds."""
    rng = np.random.default_rng(master_seed)

    def log_uniform(lo_hi: tuple[float, float]) -> float:
        return float(np.exp(rng.uniform(math.log(lo_hi[0]), math.log(lo_hi[1]))))

    configs = []
    for _ in range(trials):
        configs.append(
            NetworkConfig(
                cell_dimension=int(rng.integers(bounds.cell_dimension[0], bounds.cell_dimension[1] + 1)),
                hidden_layers=int(rng.integers(bounds.hidden_layers[0], bounds.hidden_layers[1] + 1)),
                minibatch_size=int(rng.integers(bounds.minibatch_size[0], bounds.minibatch_size[1] + 1)),
                epoch_size=int(rng.integers(bounds.epoch_size[0], bounds.epoch_size[1] + 1)),
                max_epochs=int(rng.integers(bounds.max_epochs[0], bounds.max_epochs[1] + 1)),
                gaussian_noise_std=log_uniform(bounds.gaussian_noise_std),
                init_std=log_uniform(bounds.init_std),
                l2_weight=log_uniform(bounds.l2_weight),
                seed=train_seed,
            )
        )
    return configs


def hyperparameter_search(
    panel: Panel,
    config: PipelineConfig,
    trials: int,
    master_seed: int,
    bounds: HyperparameterBounds = HyperparameterBounds(),
    validation_length: int = 12,
    exclude_after: Month | None = None,
) -> NetworkConfig:
    """Seeded random search over the bounds; argmin of mean validation sMAPE.

    The panel passed here must be the training region only; `exclude_after`
    makes that explicit — any series extending past it is refused, which is
    the guard keeping the search blind to held-out test months. Trials train
    single-seed (ensembling is reserved for the final fit), score on the last
    `validation_length` months, and break ties by earlier trial index.
    """
    from .metrics import smape  # local import to avoid a cycle

    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    if exclude_after is not None:
        for sid, ts in panel.series.items():
            if ts.end > exclude_after:
                raise ConfigError(
                    f"series {sid!r} extends to {ts.end}, past the search "
                    f"boundary {exclude_after}"
                )
    inner_train, validation = split(panel, SplitSpec(test_length=validation_length))

    best_score = math.inf
    best: NetworkConfig | None = None
    for candidate in sample_configs(bounds, trials, master_seed, train_seed=config.network.seed):
        trial_config = replace(config, network=candidate, ensemble_seeds=1)
        model = fit(inner_train, trial_config)
        bundle = forecast(model, inner_train, min(validation_length, config.window.output_size))
        scores = []
        for sid, fc in bundle.series.items():
            actual = validation.series[sid].values[: fc.ensemble.size]
            scores.append(smape(fc.ensemble, actual))
        score = float(np.mean(scores))
        if score < best_score:
            best_score = score
            best = candidate
    assert best is not None
    return best
