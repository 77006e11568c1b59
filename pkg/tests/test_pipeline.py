"""Fit/forecast plumbing: grouping, inversion chain, persistence, tuning."""

import dataclasses
import json

import numpy as np
import pytest

from panelcast import (
    ConfigError,
    DriverSpec,
    EmptyTrainingError,
    HyperparameterBounds,
    NotFittedError,
    PipelineConfig,
    SplitSpec,
    SynthSpec,
    fit,
    forecast,
    generate,
    hyperparameter_search,
    load_model,
    save_model,
    split,
)
from panelcast.pipeline import (
    _pack,
    _unpack,
    config_from_json,
    _config_to_json,
    postprocess_forecast,
    sample_configs,
)
from panelcast.preprocess import ScaleRecord
from panelcast.windowing import Paradigm

from .conftest import quick_config, small_network


@pytest.fixture(scope="module")
def ds_model(tiny_panel):
    return fit(tiny_panel, quick_config("ds"))


@pytest.fixture(scope="module")
def se_model(tiny_panel):
    return fit(tiny_panel, quick_config("se"))


# ----------------------------------------------------------------- fitting

def test_grouping_all_pools_into_one_network(ds_model):
    assert list(ds_model.groups) == ["all"]
    assert len(ds_model.series) == 6


def test_grouping_cat_trains_one_network_per_category(tiny_panel):
    model = fit(tiny_panel, quick_config("ds", grouping="cat"))
    assert sorted(model.groups) == ["ao", "sa"]
    for rec in model.series.values():
        assert rec.group == rec.category
    a, b = (model.groups[g].params[0] for g in ("ao", "sa"))
    assert not a.equal(b)


def test_channel_layout_depends_on_paradigm(ds_model, se_model):
    assert ds_model.channel_layout == ("value",)
    assert se_model.channel_layout == ("value", "seasonal")


def test_exogenous_names_extend_the_layout(driver_panel):
    config = quick_config("se", exogenous_names=("driver",))
    model = fit(driver_panel, config)
    assert model.channel_layout == ("value", "seasonal", "driver")
    rec = next(iter(model.series.values()))
    assert "driver" in rec.exo_raw_tail and "driver" in rec.exo_scales


def test_fit_rejects_unknown_exogenous_name(tiny_panel):
    with pytest.raises(Exception):
        fit(tiny_panel, quick_config("se", exogenous_names=("nope",)))


def test_short_series_are_skipped_with_reasons(tiny_panel):
    from panelcast.panel import Panel, TimeSeries
    from panelcast.panel import Month

    stub = TimeSeries(
        id="stub", category="ao", start=Month(2015, 1),
        values=np.arange(10, dtype=np.float64) + 1,
    )
    bigger = Panel(
        series={**tiny_panel.series, "stub": stub},
        frequency=tiny_panel.frequency,
    )
    model = fit(bigger, quick_config("ds"))
    assert "stub" in model.skipped
    assert "stub" not in model.series


def test_fit_with_no_usable_series_raises():
    panel = generate(SynthSpec(n_series=3, n_months=48, master_seed=0))
    config = quick_config("ds", window=dataclasses.replace(
        quick_config("ds").window, input_size=40, output_size=12,
    ))
    with pytest.raises(EmptyTrainingError):
        fit(panel, config)


def test_ensemble_trains_one_network_per_seed(tiny_panel):
    config = quick_config("ds", ensemble_seeds=3)
    model = fit(tiny_panel, config)
    group = model.groups["all"]
    assert group.seeds == (0, 1, 2)
    assert not group.params[0].equal(group.params[1])


# -------------------------------------------------------------- forecasting

def test_forecast_months_continue_the_training_calendar(ds_model, tiny_panel):
    bundle = forecast(ds_model, tiny_panel, horizon=5)
    sid = tiny_panel.ids()[0]
    fc = bundle.series[sid]
    assert len(fc.months) == 5
    assert fc.months[0] == tiny_panel.series[sid].end.shift(1)
    assert fc.ensemble.shape == (5,)
    assert np.all(fc.ensemble >= 0)


def test_forecast_is_deterministic(se_model, tiny_panel):
    a = forecast(se_model, tiny_panel, horizon=12)
    b = forecast(se_model, tiny_panel, horizon=12)
    for sid in tiny_panel.ids():
        np.testing.assert_array_equal(a.series[sid].ensemble, b.series[sid].ensemble)


def test_forecast_conditions_on_fit_time_tails_only(tiny_panel):
    """Post-training months in the supplied panel must not leak into the
    conditioning window: the model read its tails at fit time."""
    train_part, _ = split(tiny_panel, SplitSpec(test_length=12))
    model = fit(train_part, quick_config("ds"))
    from_train = forecast(model, train_part, horizon=12)
    from_full = forecast(model, tiny_panel, horizon=12)
    for sid in tiny_panel.ids():
        np.testing.assert_array_equal(
            from_train.series[sid].ensemble, from_full.series[sid].ensemble
        )


def test_forecast_ensemble_is_the_per_seed_median(tiny_panel):
    model = fit(tiny_panel, quick_config("ds", ensemble_seeds=3))
    bundle = forecast(model, tiny_panel, horizon=4)
    fc = next(iter(bundle.series.values()))
    assert fc.per_seed.shape == (3, 4)
    np.testing.assert_array_equal(fc.ensemble, np.median(fc.per_seed, axis=0))


def test_forecast_rejects_unknown_series(ds_model):
    from panelcast.panel import Month, Panel, TimeSeries

    ghost = TimeSeries(
        id="ghost", category="ao", start=Month(2011, 9),
        values=np.arange(48, dtype=np.float64) + 1,
    )
    with pytest.raises(NotFittedError):
        forecast(ds_model, Panel(series={"ghost": ghost}, frequency=12), horizon=3)


def test_forecast_horizon_is_capped_by_the_trained_window(ds_model, tiny_panel):
    with pytest.raises(ConfigError):
        forecast(ds_model, tiny_panel, horizon=13)
    with pytest.raises(ConfigError):
        forecast(ds_model, tiny_panel, horizon=0)


# ---------------------------------------------------------------- inversion

def test_postprocess_matches_hand_composed_arithmetic():
    record = ScaleRecord(id="s", mean_scale=7.5, log_offset=1.0)
    out = np.array([0.02, -0.05, 0.1])
    nv = 0.6
    seasonal = np.array([0.3, -0.2, 0.05])
    got, clamped = postprocess_forecast(out, nv, seasonal, record)
    expected = (np.exp(out + nv + seasonal) - 1.0) * 7.5
    assert not clamped
    np.testing.assert_allclose(got, expected, rtol=1e-15)


def test_postprocess_without_seasonal_is_the_se_path():
    record = ScaleRecord(id="s", mean_scale=3.0, log_offset=1.0)
    out = np.array([0.5])
    got, _ = postprocess_forecast(out, 0.25, None, record)
    np.testing.assert_allclose(got, (np.exp(0.75) - 1.0) * 3.0, rtol=1e-15)


# -------------------------------------------------------------- persistence

def test_save_load_round_trip_preserves_forecasts(tmp_path, se_model, tiny_panel):
    save_model(se_model, tmp_path / "m")
    again = load_model(tmp_path / "m")
    assert _config_to_json(again.config) == _config_to_json(se_model.config)
    before = forecast(se_model, tiny_panel, horizon=12)
    after = forecast(again, tiny_panel, horizon=12)
    for sid in tiny_panel.ids():
        np.testing.assert_array_equal(
            before.series[sid].ensemble, after.series[sid].ensemble
        )


def test_two_saves_are_byte_identical(tmp_path, ds_model):
    a = save_model(ds_model, tmp_path / "a")
    b = save_model(ds_model, tmp_path / "b")
    files_a = sorted(p.name for p in a.iterdir())
    files_b = sorted(p.name for p in b.iterdir())
    assert files_a == files_b
    for name in files_a:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_load_rejects_foreign_manifests(tmp_path):
    target = tmp_path / "m"
    target.mkdir()
    (target / "manifest.json").write_text(json.dumps({"format": "something-else"}))
    with pytest.raises(ConfigError):
        load_model(target)


def test_pack_unpack_round_trips(ds_model):
    params = ds_model.groups["all"].params[0]
    vector = _pack(params)
    assert vector.dtype == np.float64 and vector.ndim == 1
    again = _unpack(
        vector, params.cell_dimension, params.hidden_layers,
        params.input_channels, params.horizon,
    )
    assert params.equal(again)


def test_config_json_round_trips():
    config = quick_config("se", grouping="cat", exogenous_names=("z",))
    again = config_from_json(_config_to_json(config))
    assert _config_to_json(again) == _config_to_json(config)
    assert again.paradigm is Paradigm.SE


# -------------------------------------------------------------------- tuning

def test_sampled_configs_respect_bounds():
    bounds = HyperparameterBounds()
    for config in sample_configs(bounds, trials=60, master_seed=5):
        assert bounds.contains(config), config


def test_sampling_is_seed_deterministic():
    a = sample_configs(HyperparameterBounds(), 10, master_seed=3)
    b = sample_configs(HyperparameterBounds(), 10, master_seed=3)
    assert a == b
    c = sample_configs(HyperparameterBounds(), 10, master_seed=4)
    assert a != c


def test_search_winner_is_reproducible(tiny_panel):
    bounds = HyperparameterBounds(
        cell_dimension=(4, 8), minibatch_size=(2, 6), epoch_size=(1, 2),
        max_epochs=(2, 3), hidden_layers=(1, 1),
    )
    config = quick_config("ds")
    kwargs = dict(trials=3, master_seed=2, bounds=bounds, validation_length=12)
    a = hyperparameter_search(tiny_panel, config, **kwargs)
    b = hyperparameter_search(tiny_panel, config, **kwargs)
    assert a == b
    assert bounds.contains(a)


def test_search_refuses_panels_that_reach_past_the_boundary():
    """The calendar guard: handing the search a panel containing months after
    `exclude_after` is an error, so test regions cannot leak into tuning."""
    panel = generate(SynthSpec(n_series=4, n_months=64, master_seed=21))
    train_part, _ = split(panel, SplitSpec(test_length=12))
    boundary = next(iter(train_part.series.values())).end
    bounds = HyperparameterBounds(
        cell_dimension=(4, 6), minibatch_size=(2, 4), epoch_size=(1, 1),
        max_epochs=(2, 2), hidden_layers=(1, 1),
    )
    config = quick_config("ds")
    # the full panel still contains the 12 held-out months
    with pytest.raises(ConfigError):
        hyperparameter_search(
            panel, config, trials=1, master_seed=0,
            bounds=bounds, exclude_after=boundary,
        )
    # the properly truncated panel passes
    hyperparameter_search(
        train_part, config, trials=1, master_seed=0,
        bounds=bounds, exclude_after=boundary, validation_length=12,
    )
