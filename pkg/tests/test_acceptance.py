"""End-to-end acceptance gates.

One test per contractual gate, in three tiers: exactness (gradients,
inverses, metric oracles), statistical behavior on planted synthetic panels
(accuracy floors, paradigm/seasonality interaction, screening power, scenario
direction), and reproducibility (bit-exact training, leak-proof tuning).

Expensive fits are shared via session fixtures; every gate asserts its own
pinned tolerance and prints the measured numbers next to the verdict.
"""

import dataclasses
import time

import numpy as np
import pytest

from panelcast import (
    ConfigError,
    DriverSpec,
    HyperparameterBounds,
    NetworkConfig,
    PipelineConfig,
    Scenario,
    SplitSpec,
    SynthSpec,
    fit,
    forecast,
    gc_compare,
    generate,
    gradient_check,
    inverse_transform,
    hyperparameter_search,
    mase,
    save_model,
    seasonal_naive,
    smape,
    split,
    transform,
    whatif,
    wilcoxon_signed_rank,
)
from panelcast.pipeline import GroupModel, TrainedModel, postprocess_forecast, sample_configs
from panelcast.preprocess import ScaleRecord
from panelcast.windowing import Paradigm, WindowSpec, local_normalize, denormalize, make_windows

from .conftest import series_from


def _mean_smape_vs_naive(train_part, test_part, horizon, period):
    scores = []
    for sid, ts in train_part.series.items():
        fc = seasonal_naive(ts.values, period, horizon)
        scores.append(smape(fc, test_part.series[sid].values[:horizon]))
    return float(np.mean(scores))


# =========================================================== gate 1: gradients

def test_gate_01_analytic_gradients_match_finite_differences():
    """4-cell, 1-layer, 5-step input, 2-step output; 20 seeded trials;
    central differences at h=1e-5; every block within relative 1e-4."""
    config = NetworkConfig(
        cell_dimension=4, hidden_layers=1, minibatch_size=1, epoch_size=1,
        max_epochs=1, gaussian_noise_std=0.0, init_std=2e-4, l2_weight=3e-4, seed=0,
    )
    t0 = time.monotonic()
    report = gradient_check(config, tolerance=1e-4, trials=20, input_size=5,
                            horizon=2, step=1e-5)
    elapsed = time.monotonic() - t0
    print(f"\n[gate 1] gradient check: worst rel err {report.worst:.3e} "
          f"(tol 1e-4), {elapsed:.1f}s")
    assert report.passed, f"worst relative error {report.worst:.3e} exceeds 1e-4"
    assert elapsed < 60.0, f"gradient check took {elapsed:.1f}s, budget is 60s"


# ============================================================ gate 2: inverses

def test_gate_02_inverse_chains_are_exact():
    """1,000 random series round-trip the scaling/log transform within
    relative 1e-9; the local-level shift inverts exactly; the full
    deseasonalized post-processing chain matches hand-composed arithmetic."""
    rng = np.random.default_rng(123)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(24, 61))
        values = rng.uniform(0.0, 1e4, n)
        values[rng.integers(0, n)] = 0.0  # zero counts must survive
        ts = series_from(values)
        out, record = transform(ts)
        restored, clamped = inverse_transform(out, record)
        assert not clamped
        err = float(np.max(np.abs(restored - values) / np.maximum(np.abs(values), 1.0)))
        worst = max(worst, err)
    assert worst < 1e-9, f"transform round-trip relative error {worst:.2e}"

    # local normalization round-trip, both paradigms
    worst_norm = 0.0
    for seed in range(50):
        r = np.random.default_rng(seed)
        primary = r.normal(2.0, 1.0, 30)
        trend = r.normal(0.0, 0.5, 30)
        seasonal = r.normal(0.0, 0.3, 30)
        for paradigm in (Paradigm.DS, Paradigm.SE):
            spec = WindowSpec(5, 3, 1, paradigm=paradigm)
            seas = seasonal if paradigm is Paradigm.SE else None
            for w in make_windows("s", primary, spec, seasonal=seas):
                normed = local_normalize(w, trend, paradigm)
                back = denormalize(normed.target, normed.norm_value)
                denom = np.maximum(np.abs(w.target), 1.0)
                worst_norm = max(worst_norm, float(np.max(np.abs(back - w.target) / denom)))
    assert worst_norm < 1e-9, f"normalization round-trip relative error {worst_norm:.2e}"

    # reseasonalized inversion vs hand-written arithmetic
    worst_chain = 0.0
    for seed in range(200):
        r = np.random.default_rng(1000 + seed)
        record = ScaleRecord(id="s", mean_scale=float(r.uniform(0.5, 50.0)), log_offset=1.0)
        out = r.normal(0.0, 0.2, 12)
        nv = float(r.normal(0.5, 0.2))
        seas = r.normal(0.0, 0.3, 12)
        got, _ = postprocess_forecast(out, nv, seas, record)
        expected = (np.exp(out + nv + seas) - record.log_offset) * record.mean_scale
        expected = np.maximum(expected, 0.0)
        denom = np.maximum(np.abs(expected), 1.0)
        worst_chain = max(worst_chain, float(np.max(np.abs(got - expected) / denom)))
    assert worst_chain < 1e-9, f"reseasonalization chain error {worst_chain:.2e}"
    print(f"\n[gate 2] inverse exactness: transform {worst:.1e}, "
          f"normalization {worst_norm:.1e}, chain {worst_chain:.1e} (tol 1e-9)")


# ======================================================= gate 3: metric oracles

def test_gate_03_metric_oracles_are_exact():
    """Frozen single-value oracles: the metrics must reproduce them exactly."""
    assert smape([3.0], [1.0]) == 1.0

    train = np.concatenate([np.arange(1, 13), np.arange(2, 14)]).astype(float)
    assert mase(np.array([6.0, 8.0]), np.array([5.0, 7.0]), train, period=12) == 1.0

    history = np.arange(36, dtype=np.float64)
    np.testing.assert_array_equal(seasonal_naive(history, 12, 12), history[-12:])

    a = np.arange(1.0, 13.0)
    b = a + np.linspace(0.5, 1.7, 12)
    p = wilcoxon_signed_rank(a, b)
    assert p == 2.0 ** -11, f"expected 2^-11, got {p!r}"
    print(f"\n[gate 3] metric oracles: smape=1.0, mase=1.0, naive cycle exact, "
          f"wilcoxon p={p:.9f}")


# ================================================= gate 4: end-to-end accuracy

@pytest.fixture(scope="session")
def scale_run():
    """The 40-series x 96-month seed-7 fixture under the default config,
    both paradigms, scored on a 12-month holdout. Shared across gates."""
    panel = generate(SynthSpec(n_series=40, n_months=96, master_seed=7))
    train_part, test_part = split(panel, SplitSpec(test_length=12))
    t0 = time.monotonic()
    means = {}
    for paradigm in ("ds", "se"):
        model = fit(train_part, PipelineConfig(paradigm=paradigm))
        bundle = forecast(model, train_part, 12)
        scores = [
            smape(bundle.series[sid].ensemble, test_part.series[sid].values)
            for sid in panel.ids()
        ]
        means[paradigm] = float(np.mean(scores))
    elapsed = time.monotonic() - t0
    naive = _mean_smape_vs_naive(train_part, test_part, 12, panel.frequency)
    return means, naive, elapsed


def test_gate_04_default_config_beats_seasonal_naive_by_ten_percent(scale_run):
    means, naive, elapsed = scale_run
    improvements = {p: (naive - m) / naive for p, m in means.items()}
    print(f"\n[gate 4] holdout mean sMAPE: naive {naive:.4f}, "
          f"ds {means['ds']:.4f} ({improvements['ds']:+.1%}), "
          f"se {means['se']:.4f} ({improvements['se']:+.1%}), {elapsed:.0f}s")
    assert improvements["ds"] >= 0.10, f"ds improvement {improvements['ds']:.1%} < 10%"
    assert improvements["se"] >= 0.10, f"se improvement {improvements['se']:.1%} < 10%"
    assert elapsed < 900.0, f"both fits took {elapsed:.0f}s, budget is 15 minutes"


# ============================== gate 5: paradigm x seasonal-strength interaction

def _strength_arm(amplitude, noise, fixture_seed):
    panel = generate(SynthSpec(
        n_series=12, n_months=72, master_seed=fixture_seed,
        amplitude_range=amplitude, noise_std=noise,
    ))
    train_part, test_part = split(panel, SplitSpec(test_length=12))
    wins = {"ds": 0, "se": 0}
    for seed in range(5):
        means = {}
        for paradigm in ("ds", "se"):
            config = PipelineConfig(
                paradigm=paradigm, ensemble_seeds=1,
                network=dataclasses.replace(NetworkConfig(), seed=seed),
            )
            model = fit(train_part, config)
            bundle = forecast(model, train_part, 12)
            means[paradigm] = float(np.mean([
                smape(bundle.series[sid].ensemble, test_part.series[sid].values)
                for sid in panel.ids()
            ]))
        winner = "ds" if means["ds"] <= means["se"] else "se"
        wins[winner] += 1
    return wins


def test_gate_05_deseasonalizing_wins_where_seasonality_is_strong():
    """Majority vote over 5 seeds: removing the seasonal component first wins
    on a strength>=0.9 fixture; feeding it as a channel wins at strength<=0.3."""
    strong = _strength_arm((12.0, 20.0), 0.6, fixture_seed=50)
    weak = _strength_arm((0.0, 0.7), 4.0, fixture_seed=51)
    print(f"\n[gate 5] strong-seasonality votes {strong}, weak-seasonality votes {weak}")
    assert strong["ds"] >= 3, f"ds won only {strong['ds']}/5 on the strong fixture"
    assert weak["se"] >= 3, f"se won only {weak['se']}/5 on the weak fixture"


# ================================================== gate 6: screening power

def _screen_arm(beta):
    improved = 0
    for master_seed in range(100, 110):
        panel = generate(SynthSpec(
            n_series=16, n_months=60, master_seed=master_seed,
            driver=DriverSpec(name="driver", lag=1, beta=beta, level=30.0, std=8.0),
        ))
        config = PipelineConfig(
            paradigm="se", exogenous_names=("driver",), ensemble_seeds=1,
        )
        report = gc_compare(panel, config, split_spec=SplitSpec(test_length=12))
        improved += int(report.improved)
    return improved


def test_gate_06_screening_detects_planted_drivers_and_ignores_null_ones():
    t0 = time.monotonic()
    planted = _screen_arm(beta=1.0)
    null = _screen_arm(beta=0.0)
    elapsed = time.monotonic() - t0
    print(f"\n[gate 6] with-driver beats without: planted {planted}/10, "
          f"null {null}/10, {elapsed:.0f}s")
    assert planted >= 8, f"planted driver improved only {planted}/10 seeds"
    assert null <= 6, f"null driver 'improved' {null}/10 seeds"
    assert elapsed < 1200.0, f"screening took {elapsed:.0f}s, budget is 20 minutes"


# ===================================================== gate 7: scenario sanity

@pytest.fixture(scope="session")
def planted_positive_models():
    """Driver whose lag matches the forecast horizon: every scenario month is
    causally downstream of the perturbed conditioning window."""
    panel = generate(SynthSpec(
        n_series=12, n_months=72, master_seed=11,
        driver=DriverSpec(name="driver", lag=12, beta=1.0, level=30.0, std=8.0),
    ))
    models = {}
    for paradigm in ("ds", "se"):
        config = PipelineConfig(
            paradigm=paradigm, exogenous_names=("driver",), ensemble_seeds=1,
        )
        models[paradigm] = fit(panel, config)
    return models


@pytest.mark.parametrize("paradigm", ["ds", "se"])
def test_gate_07_scenarios_respond_in_the_planted_direction(planted_positive_models, paradigm):
    model = planted_positive_models[paradigm]
    results = {
        m: whatif(model, Scenario(exogenous="driver", multiplier=m), horizon=12)
        for m in (0.90, 0.95, 1.00, 1.05, 1.10)
    }

    # multiplier 1.0 reproduces the baseline bit-exactly
    for item in results[1.00].series.values():
        np.testing.assert_array_equal(item.baseline, item.scenario)

    # per-series ordering: a bigger driver means a bigger forecast
    sids = sorted(model.series)
    ordered = sum(
        float(np.mean(results[1.10].series[sid].scenario))
        > float(np.mean(results[0.90].series[sid].scenario))
        for sid in sids
    )

    # aggregate responses bracket monotonically
    def response(mult):
        return float(np.mean([
            np.mean(results[mult].series[sid].scenario)
            - np.mean(results[mult].series[sid].baseline)
            for sid in sids
        ]))

    r = {m: response(m) for m in (0.90, 0.95, 1.05, 1.10)}
    print(f"\n[gate 7/{paradigm}] ordered {ordered}/12 series; aggregate "
          f"responses {r[0.90]:+.3f} <= {r[0.95]:+.3f} <= 0 <= {r[1.05]:+.3f} <= {r[1.10]:+.3f}")
    assert ordered >= 11, f"only {ordered}/12 series ordered 1.10 above 0.90"
    assert r[0.90] <= r[0.95] <= 0.0 <= r[1.05] <= r[1.10], f"responses not bracketed: {r}"


# ====================================================== gate 8: determinism

def test_gate_08_training_is_bit_deterministic_and_order_free(tmp_path):
    panel = generate(SynthSpec(n_series=8, n_months=60, master_seed=19))
    config = PipelineConfig(
        paradigm="se", ensemble_seeds=10,
        network=dataclasses.replace(
            NetworkConfig(), cell_dimension=16, max_epochs=6,
        ),
    )
    model_a = fit(panel, config)
    model_b = fit(panel, config)
    dir_a = save_model(model_a, tmp_path / "a")
    dir_b = save_model(model_b, tmp_path / "b")
    names = sorted(p.name for p in dir_a.iterdir())
    assert names == sorted(p.name for p in dir_b.iterdir())
    for name in names:
        assert (dir_a / name).read_bytes() == (dir_b / name).read_bytes(), (
            f"{name} differs between two identical fits"
        )

    # the 10-seed ensemble median ignores seed order
    group = model_a.groups["all"]
    reversed_group = GroupModel(
        name=group.name,
        seeds=tuple(reversed(group.seeds)),
        params={s: group.params[s] for s in reversed(group.seeds)},
    )
    shuffled = TrainedModel(
        config=model_a.config, frequency=model_a.frequency,
        channel_layout=model_a.channel_layout,
        groups={"all": reversed_group}, series=model_a.series,
        skipped=model_a.skipped,
    )
    straight = forecast(model_a, panel, 12)
    permuted = forecast(shuffled, panel, 12)
    for sid in panel.ids():
        np.testing.assert_array_equal(
            straight.series[sid].ensemble, permuted.series[sid].ensemble
        )
    print(f"\n[gate 8] {len(names)} artifacts bit-identical across refits; "
          f"10-seed median invariant under seed permutation")


# ==================================================== gate 9: tuning hygiene

def test_gate_09_search_stays_in_bounds_reproduces_and_cannot_peek():
    bounds = HyperparameterBounds()
    sampled = sample_configs(bounds, trials=200, master_seed=3)
    assert all(bounds.contains(c) for c in sampled), "a sampled config left the grid"

    panel = generate(SynthSpec(n_series=6, n_months=64, master_seed=23))
    train_part, _ = split(panel, SplitSpec(test_length=12))
    boundary = next(iter(train_part.series.values())).end

    small = HyperparameterBounds(
        cell_dimension=(8, 16), minibatch_size=(2, 6), epoch_size=(1, 2),
        max_epochs=(3, 6), hidden_layers=(1, 1),
    )
    config = PipelineConfig(paradigm="ds", ensemble_seeds=1)
    kwargs = dict(trials=3, master_seed=6, bounds=small, validation_length=12,
                  exclude_after=boundary)
    winner_a = hyperparameter_search(train_part, config, **kwargs)
    winner_b = hyperparameter_search(train_part, config, **kwargs)
    assert winner_a == winner_b, "same master seed produced different winners"
    assert small.contains(winner_a)

    # handing the search data past the calendar bound is a hard error
    with pytest.raises(ConfigError):
        hyperparameter_search(panel, config, **kwargs)
    print(f"\n[gate 9] 200 sampled configs in bounds; winner reproducible "
          f"(cell={winner_a.cell_dimension}); post-boundary data refused")
