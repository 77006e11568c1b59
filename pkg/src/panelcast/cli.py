"""Command-line workflow: generate fixtures, train, forecast, evaluate,
search hyper-parameters, screen exogenous drivers, run what-if scenarios,
and serve the HTTP gateway.

Every command prints a one-line summary, writes its artifacts plus a run
manifest (inputs digested, config snapshot, seed, timing), and exits nonzero
with a machine-readable `error: <Type>: <message>` line on failure.
"""

from __future__ import annotations

import dataclasses
import functools
import hashlib
import json
import sys
import time
from pathlib import Path

import click
import numpy as np

from .causal import Scenario, gc_compare, whatif
from .errors import ConfigError, PanelcastError
from .metrics import SeriesScore, aggregate, mase, smape
from .network import NetworkConfig
from .panel import (
    Panel,
    SplitSpec,
    load_exogenous,
    load_panel,
    split,
    write_exogenous_csv,
    write_panel_csv,
)
from .pipeline import (
    Grouping,
    HyperparameterBounds,
    PipelineConfig,
    _config_to_json,
    config_from_json,
    fit,
    forecast,
    hyperparameter_search,
    load_model,
    save_model,
)
from .synth import DriverSpec, SynthSpec, generate
from .windowing import Paradigm, WindowSpec


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_run_manifest(
    command: str,
    out: Path,
    seed: int | None,
    config: dict,
    inputs: list[Path],
    artifacts: list[Path],
    t0: float,
) -> None:
    manifest = {
        "command": command,
        "seed": seed,
        "config": config,
        "inputs": {str(p): _digest(p) for p in inputs},
        "artifacts": [str(p) for p in artifacts],
        "duration_s": round(time.time() - t0, 3),
    }
    target = out / "run_manifest.json" if out.is_dir() else out.with_name(out.name + ".run.json")
    with open(target, "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _fail_on_domain_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (PanelcastError, FileNotFoundError, ValueError) as exc:
            click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _load(panel_path: str, exo_path: str | None, frequency: int = 12) -> Panel:
    panel = load_panel(panel_path, frequency=frequency)
    if exo_path:
        panel = panel.with_exogenous(load_exogenous(exo_path))
    return panel


def _pipeline_config(
    config_file: str | None,
    paradigm: str | None,
    grouping: str | None,
    seed: int | None,
    ensemble_seeds: int | None,
    exo_names: tuple[str, ...],
    input_size: int | None,
    horizon: int | None,
) -> PipelineConfig:
    """Start from the config file (or defaults), then let flags win."""
    base = (
        config_from_json(json.loads(Path(config_file).read_text()))
        if config_file
        else PipelineConfig()
    )
    network = base.network
    if seed is not None:
        network = dataclasses.replace(network, seed=seed)
    window = WindowSpec(
        input_size=input_size if input_size is not None else base.window.input_size,
        output_size=horizon if horizon is not None else base.window.output_size,
        stride=base.window.stride,
        paradigm=base.paradigm,
    )
    return PipelineConfig(
        paradigm=Paradigm(paradigm) if paradigm else base.paradigm,
        grouping=Grouping(grouping) if grouping else base.grouping,
        window=window,
        network=network,
        ensemble_seeds=ensemble_seeds if ensemble_seeds is not None else base.ensemble_seeds,
        exogenous_names=exo_names or base.exogenous_names,
    )


@click.group()
def main() -> None:
    """Global forecasting and scenario analysis for panels of monthly counts."""


@main.command()
@click.option("--out", required=True, type=click.Path(), help="panel CSV to write")
@click.option("--exo-out", type=click.Path(), help="exogenous CSV; enables the driver")
@click.option("--series", default=40, show_default=True)
@click.option("--months", default=96, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--noise-std", default=1.0, show_default=True)
@click.option("--amplitude", nargs=2, type=float, default=(3.0, 10.0), show_default=True)
@click.option("--slope", nargs=2, type=float, default=(-0.15, 0.25), show_default=True)
@click.option("--categories", default=None, help="sizes like 'ao:20,sa:20'")
@click.option("--driver-name", default="driver", show_default=True)
@click.option("--driver-lag", default=1, show_default=True)
@click.option("--driver-beta", default=1.0, show_default=True)
@click.option("--driver-level", default=30.0, show_default=True)
@click.option("--driver-std", default=8.0, show_default=True)
@click.option("--driver-rho", default=0.0, show_default=True)
@_fail_on_domain_errors
def synth(out, exo_out, series, months, seed, noise_std, amplitude, slope, categories,
          driver_name, driver_lag, driver_beta, driver_level, driver_std, driver_rho):
    """Write a deterministic synthetic panel (and optional driver channel)."""
    t0 = time.time()
    sizes = None
    if categories:
        sizes = {}
        for part in categories.split(","):
            name, _, count = part.partition(":")
            sizes[name.strip()] = int(count)
    driver = None
    if exo_out:
        driver = DriverSpec(
            name=driver_name, lag=driver_lag, beta=driver_beta,
            level=driver_level, std=driver_std, rho=driver_rho,
        )
    spec = SynthSpec(
        n_series=series, n_months=months, noise_std=noise_std,
        amplitude_range=tuple(amplitude), slope_range=tuple(slope),
        driver=driver, category_sizes=sizes, master_seed=seed,
    )
    panel = generate(spec)
    out = Path(out)
    write_panel_csv(panel, str(out))
    artifacts = [out]
    if exo_out:
        write_exogenous_csv(panel.exogenous, exo_out)
        artifacts.append(Path(exo_out))
    _write_run_manifest(
        "synth", out, seed,
        {"series": series, "months": months, "noise_std": noise_std,
         "amplitude": list(amplitude), "slope": list(slope),
         "categories": sizes, "driver": driver.__dict__ if driver else None},
        [], artifacts, t0,
    )
    click.echo(f"synth: wrote {len(panel)} series x {months} months to {out}")


_common_model_options = [
    click.option("--panel", "panel_path", required=True, type=click.Path(exists=True)),
    click.option("--exo-file", "exo_path", type=click.Path(exists=True)),
    click.option("--paradigm", type=click.Choice(["ds", "se"])),
    click.option("--grouping", type=click.Choice(["all", "cat"])),
    click.option("--seed", type=int, default=None),
    click.option("--ensemble-seeds", type=int, default=None),
    click.option("--exo-name", "exo_names", multiple=True,
                 help="exogenous channel(s) to feed the network"),
    click.option("--input-size", type=int, default=None),
    click.option("--horizon", type=int, default=None),
    click.option("--config", "config_file", type=click.Path(exists=True),
                 help="pipeline config JSON; explicit flags win"),
]


def _with_options(options):
    def wrap(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn

    return wrap


@main.command()
@_with_options(_common_model_options)
@click.option("--holdout", default=0, show_default=True,
              help="trailing months to exclude from training")
@click.option("--out", "out_dir", required=True, type=click.Path())
@_fail_on_domain_errors
def train(panel_path, exo_path, paradigm, grouping, seed, ensemble_seeds, exo_names,
          input_size, horizon, config_file, holdout, out_dir):
    """Fit the global model and persist it to a directory."""
    t0 = time.time()
    panel = _load(panel_path, exo_path)
    config = _pipeline_config(config_file, paradigm, grouping, seed, ensemble_seeds,
                              tuple(exo_names), input_size, horizon)
    if holdout:
        panel, _ = split(panel, SplitSpec(test_length=holdout))
    model = fit(panel, config)
    out = Path(out_dir)
    save_model(model, out)
    inputs = [Path(panel_path)] + ([Path(exo_path)] if exo_path else [])
    _write_run_manifest("train", out, config.network.seed, _config_to_json(config),
                        inputs, [out / "manifest.json"], t0)
    skipped = f", skipped {len(model.skipped)}" if model.skipped else ""
    click.echo(
        f"train: {config.paradigm.value}/{config.grouping.value} over "
        f"{len(model.series)} series, {len(model.groups)} group(s), "
        f"{config.ensemble_seeds} seed(s){skipped} -> {out}"
    )


@main.command(name="forecast")
@click.option("--model", "model_dir", required=True, type=click.Path(exists=True))
@click.option("--panel", "panel_path", required=True, type=click.Path(exists=True))
@click.option("--exo-file", "exo_path", type=click.Path(exists=True))
@click.option("--horizon", default=12, show_default=True)
@click.option("--out", required=True, type=click.Path())
@_fail_on_domain_errors
def forecast_cmd(model_dir, panel_path, exo_path, horizon, out):
    """Write ensembled forecasts as series_id,month,value rows."""
    t0 = time.time()
    model = load_model(model_dir)
    panel = _load(panel_path, exo_path)
    bundle = forecast(model, panel, horizon)
    out = Path(out)
    lines = ["series_id,month,value"]
    for sid in sorted(bundle.series):
        fc = bundle.series[sid]
        for m, v in zip(fc.months, fc.ensemble):
            lines.append(f"{sid},{m},{float(v)!r}")
    out.write_text("\n".join(lines) + "\n")
    _write_run_manifest("forecast", out, None, {"horizon": horizon},
                        [Path(model_dir) / "manifest.json", Path(panel_path)], [out], t0)
    click.echo(f"forecast: {len(bundle.series)} series x {horizon} months -> {out}")


@main.command()
@click.option("--model", "model_dir", required=True, type=click.Path(exists=True))
@click.option("--panel", "panel_path", required=True, type=click.Path(exists=True))
@click.option("--exo-file", "exo_path", type=click.Path(exists=True))
@click.option("--test", "test_length", default=12, show_default=True)
@click.option("--out", required=True, type=click.Path())
@_fail_on_domain_errors
def evaluate(model_dir, panel_path, exo_path, test_length, out):
    """Score held-out months; writes per-series and aggregate CSVs."""
    t0 = time.time()
    model = load_model(model_dir)
    panel = _load(panel_path, exo_path)
    train_part, test_part = split(panel, SplitSpec(test_length=test_length))
    for sid, rec in model.series.items():
        ts = train_part.series.get(sid)
        if ts is not None and ts.end != rec.train_end:
            raise ConfigError(
                f"series {sid!r}: training region ends {rec.train_end} but the "
                f"panel minus {test_length} test months ends {ts.end}"
            )
    horizon = min(test_length, model.config.window.output_size)
    bundle = forecast(model, train_part, horizon)
    scores = []
    for sid, fc in bundle.series.items():
        actual = test_part.series[sid].values[:horizon]
        train_values = train_part.series[sid].values
        scores.append(SeriesScore(
            series_id=sid,
            smape=smape(fc.ensemble, actual),
            mase=mase(fc.ensemble, actual, train_values, model.frequency),
        ))
    label = f"{model.config.paradigm.value}-{model.config.grouping.value}"
    report = aggregate(scores, method=label)
    out = Path(out)
    out.write_text(report.to_csv())
    agg_path = out.with_name(out.stem + ".aggregate" + out.suffix)
    agg_path.write_text(report.aggregate_csv())
    _write_run_manifest("evaluate", out, None, {"test": test_length, "method": label},
                        [Path(model_dir) / "manifest.json", Path(panel_path)],
                        [out, agg_path], t0)
    click.echo(
        f"evaluate[{label}]: mean sMAPE {report.mean_smape:.4f}, "
        f"median sMAPE {report.median_smape:.4f}, mean MASE {report.mean_mase:.4f}, "
        f"median MASE {report.median_mase:.4f} -> {out}"
    )


@main.command()
@_with_options(_common_model_options)
@click.option("--trials", default=30, show_default=True)
@click.option("--validation", default=12, show_default=True)
@click.option("--out", required=True, type=click.Path())
@_fail_on_domain_errors
def hpo(panel_path, exo_path, paradigm, grouping, seed, ensemble_seeds, exo_names,
        input_size, horizon, config_file, trials, validation, out):
    """Random search over the tuning grid; writes the winning config JSON."""
    t0 = time.time()
    panel = _load(panel_path, exo_path)
    config = _pipeline_config(config_file, paradigm, grouping, seed, ensemble_seeds,
                              tuple(exo_names), input_size, horizon)
    master_seed = config.network.seed
    winner = hyperparameter_search(
        panel, config, trials=trials, master_seed=master_seed,
        validation_length=validation,
    )
    best = PipelineConfig(
        paradigm=config.paradigm, grouping=config.grouping, window=config.window,
        network=winner, ensemble_seeds=config.ensemble_seeds,
        exogenous_names=config.exogenous_names,
    )
    out = Path(out)
    with open(out, "w") as fh:
        json.dump(_config_to_json(best), fh, indent=1, sort_keys=True)
        fh.write("\n")
    inputs = [Path(panel_path)] + ([Path(exo_path)] if exo_path else [])
    _write_run_manifest("hpo", out, master_seed,
                        {"trials": trials, "validation": validation}, inputs, [out], t0)
    click.echo(
        f"hpo: {trials} trials -> cell={winner.cell_dimension} layers={winner.hidden_layers} "
        f"batch={winner.minibatch_size} epochs={winner.max_epochs}x{winner.epoch_size} -> {out}"
    )


@main.command()
@_with_options(_common_model_options)
@click.option("--candidate", default=None, help="channel under test (default: the only one)")
@click.option("--test", "test_length", default=12, show_default=True)
@click.option("--out", required=True, type=click.Path(), help="report JSON")
@click.option("--csv", "csv_out", type=click.Path(), help="optional per-series CSV")
@_fail_on_domain_errors
def gc(panel_path, exo_path, paradigm, grouping, seed, ensemble_seeds, exo_names,
       input_size, horizon, config_file, candidate, test_length, out, csv_out):
    """Compare held-out accuracy with vs without an exogenous channel."""
    t0 = time.time()
    panel = _load(panel_path, exo_path)
    config = _pipeline_config(config_file, paradigm, grouping, seed, ensemble_seeds,
                              tuple(exo_names), input_size, horizon)
    report = gc_compare(panel, config, candidate=candidate,
                        split_spec=SplitSpec(test_length=test_length))
    out = Path(out)
    with open(out, "w") as fh:
        json.dump(report.to_json(), fh, indent=1, sort_keys=True)
        fh.write("\n")
    artifacts = [out]
    if csv_out:
        Path(csv_out).write_text(report.to_csv())
        artifacts.append(Path(csv_out))
    inputs = [Path(panel_path)] + ([Path(exo_path)] if exo_path else [])
    _write_run_manifest("gc", out, config.network.seed, _config_to_json(config),
                        inputs, artifacts, t0)
    click.echo(
        f"gc[{report.candidate}]: mean delta {report.mean_delta:+.4f} "
        f"(negative favors the channel), p={report.p_value:.4f}, "
        f"improved={'yes' if report.improved else 'no'} -> {out}"
    )


@main.command(name="whatif")
@click.option("--model", "model_dir", required=True, type=click.Path(exists=True))
@click.option("--exo", "exo_name", required=True, help="exogenous channel to perturb")
@click.option("--multiplier", required=True, type=float)
@click.option("--series", "series_ids", multiple=True, help="restrict to these ids")
@click.option("--horizon", default=12, show_default=True)
@click.option("--out", required=True, type=click.Path())
@_fail_on_domain_errors
def whatif_cmd(model_dir, exo_name, multiplier, series_ids, horizon, out):
    """Baseline vs scenario forecasts under a conditioning-window multiplier."""
    t0 = time.time()
    model = load_model(model_dir)
    scenario = Scenario(
        exogenous=exo_name, multiplier=multiplier,
        series_ids=tuple(series_ids) if series_ids else None,
    )
    result = whatif(model, scenario, horizon)
    out = Path(out)
    out.write_text(result.to_csv())
    _write_run_manifest("whatif", out, None,
                        {"exogenous": exo_name, "multiplier": multiplier, "horizon": horizon},
                        [Path(model_dir) / "manifest.json"], [out], t0)
    deltas = [
        float(np.mean(item.scenario) - np.mean(item.baseline))
        for item in result.series.values()
    ]
    click.echo(
        f"whatif[{exo_name} x{multiplier}]: {len(result.series)} series, "
        f"mean forecast shift {float(np.mean(deltas)):+.3f} -> {out}"
    )


@main.command()
@click.option("--model", "model_dir", required=True, type=click.Path(exists=True))
@click.option("--panel", "panel_path", required=True, type=click.Path(exists=True))
@click.option("--exo-file", "exo_path", type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@_fail_on_domain_errors
def serve(model_dir, panel_path, exo_path, host, port):
    """Serve forecasts and what-if scenarios over HTTP."""
    import uvicorn

    from .server import create_app

    model = load_model(model_dir)
    panel = _load(panel_path, exo_path)
    app = create_app(model, panel)
    click.echo(f"serve: {len(model.series)} series at http://{host}:{port}/api/series")
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
