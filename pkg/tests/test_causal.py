"""Driver screening and counterfactual forecasting mechanics."""

import numpy as np
import pytest

from panelcast import (
    ConfigError,
    NoExogenousError,
    NotFittedError,
    Scenario,
    SplitSpec,
    fit,
    gc_compare,
    whatif,
)
from panelcast.causal import CAVEAT

from .conftest import quick_config


@pytest.fixture(scope="module")
def exo_model(driver_panel):
    config = quick_config("se", exogenous_names=("driver",))
    return fit(driver_panel, config)


# ------------------------------------------------------------------ whatif

def test_multiplier_one_reproduces_baseline_bit_exactly(exo_model):
    result = whatif(exo_model, Scenario(exogenous="driver", multiplier=1.0), horizon=12)
    for item in result.series.values():
        np.testing.assert_array_equal(item.baseline, item.scenario)


def test_whatif_covers_every_fitted_series_by_default(exo_model):
    result = whatif(exo_model, Scenario(exogenous="driver", multiplier=1.1), horizon=6)
    assert sorted(result.series) == sorted(exo_model.series)
    item = next(iter(result.series.values()))
    assert len(item.months) == 6
    assert item.baseline.shape == (6,) and item.scenario.shape == (6,)


def test_whatif_can_restrict_to_chosen_series(exo_model):
    sid = sorted(exo_model.series)[0]
    result = whatif(
        exo_model, Scenario(exogenous="driver", multiplier=0.9, series_ids=(sid,)),
        horizon=4,
    )
    assert list(result.series) == [sid]


def test_whatif_needs_a_fitted_exogenous_channel(exo_model, tiny_panel):
    with pytest.raises(NoExogenousError):
        whatif(exo_model, Scenario(exogenous="rainfall", multiplier=1.1), horizon=3)
    plain = fit(tiny_panel, quick_config("ds"))
    with pytest.raises(NoExogenousError):
        whatif(plain, Scenario(exogenous="driver", multiplier=1.1), horizon=3)


def test_whatif_rejects_unknown_series(exo_model):
    scenario = Scenario(exogenous="driver", multiplier=1.1, series_ids=("ghost",))
    with pytest.raises(NotFittedError):
        whatif(exo_model, scenario, horizon=3)


def test_scenario_multiplier_must_be_positive():
    with pytest.raises(ValueError):
        Scenario(exogenous="driver", multiplier=0.0)
    with pytest.raises(ValueError):
        Scenario(exogenous="driver", multiplier=-0.5)


def test_whatif_csv_and_json_shapes(exo_model):
    result = whatif(exo_model, Scenario(exogenous="driver", multiplier=1.05), horizon=3)
    lines = result.to_csv().strip().split("\n")
    assert lines[0] == "series_id,month,baseline,scenario"
    assert len(lines) == 1 + 3 * len(result.series)
    payload = result.to_json()
    assert payload["exogenous"] == "driver"
    assert payload["multiplier"] == 1.05
    first = payload["series"][0]
    assert set(first) == {"id", "months", "baseline", "scenario"}
    assert all(isinstance(m, str) for m in first["months"])


# --------------------------------------------------------------- screening

def test_gc_compare_reports_both_arms(driver_panel):
    config = quick_config("se", exogenous_names=("driver",))
    report = gc_compare(driver_panel, config, split_spec=SplitSpec(test_length=12))
    assert report.candidate == "driver"
    assert sorted(report.smape_with) == sorted(driver_panel.ids())
    assert sorted(report.smape_without) == sorted(driver_panel.ids())
    assert 0.0 < report.p_value <= 1.0
    deltas = report.deltas
    assert report.mean_delta == pytest.approx(np.mean(list(deltas.values())))
    assert report.improved == (report.mean_delta < 0)
    assert report.note == CAVEAT


def test_gc_report_serializations(driver_panel):
    config = quick_config("se", exogenous_names=("driver",))
    report = gc_compare(driver_panel, config, split_spec=SplitSpec(test_length=12))
    lines = report.to_csv().strip().split("\n")
    assert lines[0] == "series_id,smape_with,smape_without,delta"
    assert len(lines) == 1 + len(driver_panel)
    payload = report.to_json()
    assert set(payload) >= {"candidate", "p_value", "mean_delta", "improved", "note", "series"}


def test_gc_compare_needs_an_exogenous_candidate(tiny_panel):
    with pytest.raises(ConfigError):
        gc_compare(tiny_panel, quick_config("se"))


def test_gc_compare_rejects_unknown_candidate(driver_panel):
    config = quick_config("se", exogenous_names=("driver",))
    with pytest.raises(ConfigError):
        gc_compare(driver_panel, config, candidate="rainfall")


def test_gc_compare_requires_matching_arms(driver_panel):
    config = quick_config("se", exogenous_names=("driver",))
    mismatched = quick_config("se", ensemble_seeds=2)
    with pytest.raises(ConfigError):
        gc_compare(driver_panel, config, without_config=mismatched)
