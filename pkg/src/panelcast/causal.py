"""Exogenous-driver screening and scenario forecasting.

The screen asks the operational question behind Granger causality: does
giving the model a candidate channel's past improve held-out forecasts of
the target, all else (seeds, windows, split) identical? The what-if engine
then re-forecasts under a deliberate perturbation of that channel.
"""

from __future__ import annotations

from dataclasses import dataclass
from statistics import mean, median

import numpy as np

from .errors import ConfigError, NoExogenousError, NotFittedError
from .metrics import smape, wilcoxon_signed_rank
from .panel import Month, Panel, SplitSpec, split
from .pipeline import PipelineConfig, TrainedModel, _infer_series, fit, forecast

CAVEAT = (
    "improvement alone is not a causal claim: significance (low p) and "
    "domain plausibility are both required"
)


@dataclass(frozen=True)
class Scenario:
    """A multiplicative perturbation of one exogenous channel's raw counts in
    the conditioning window (1.05 means 'what if there had been 5% more')."""

    exogenous: str
    multiplier: float
    series_ids: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.multiplier > 0:
            raise ValueError(f"multiplier must be > 0, got {self.multiplier}")
        if self.series_ids is not None:
            object.__setattr__(self, "series_ids", tuple(self.series_ids))


@dataclass
class SeriesWhatIf:
    series_id: str
    months: list[Month]
    baseline: np.ndarray
    scenario: np.ndarray


@dataclass
class WhatIfResult:
    exogenous: str
    multiplier: float
    horizon: int
    series: dict[str, SeriesWhatIf]

    def to_csv(self) -> str:
        lines = ["series_id,month,baseline,scenario"]
        for sid in sorted(self.series):
            item = self.series[sid]
            for m, b, s in zip(item.months, item.baseline, item.scenario):
                lines.append(f"{sid},{m},{float(b)!r},{float(s)!r}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {
            "exogenous": self.exogenous,
            "multiplier": self.multiplier,
            "horizon": self.horizon,
            "series": [
                {
                    "id": sid,
                    "months": [str(m) for m in item.months],
                    "baseline": [float(v) for v in item.baseline],
                    "scenario": [float(v) for v in item.scenario],
                }
                for sid, item in sorted(self.series.items())
            ],
        }


def whatif(model: TrainedModel, scenario: Scenario, horizon: int) -> WhatIfResult:
    """Baseline and perturbed forecasts from one fitted model.

    The multiplier scales the raw exogenous counts of the conditioning
    window before the channel's own (fixed) transform; parameters, seeds,
    seasonal components and the target's inputs stay untouched, so a
    multiplier of 1.0 reproduces the baseline bit for bit.
    """
    if scenario.exogenous not in model.config.exogenous_names:
        raise NoExogenousError(
            f"model was not fitted with exogenous channel {scenario.exogenous!r} "
            f"(has: {list(model.config.exogenous_names) or 'none'})"
        )
    ids = scenario.series_ids if scenario.series_ids is not None else tuple(model.series)
    out: dict[str, SeriesWhatIf] = {}
    for sid in ids:
        rec = model.series.get(sid)
        if rec is None:
            raise NotFittedError(f"series {sid!r} was not seen at fit time")
        base = _infer_series(model, rec, horizon)
        pert = _infer_series(
            model, rec, horizon, exo_multipliers={scenario.exogenous: scenario.multiplier}
        )
        out[sid] = SeriesWhatIf(
            series_id=sid,
            months=base.months,
            baseline=base.ensemble,
            scenario=pert.ensemble,
        )
    return WhatIfResult(
        exogenous=scenario.exogenous,
        multiplier=scenario.multiplier,
        horizon=horizon,
        series=out,
    )


@dataclass
class GCReport:
    """Paired accuracy comparison for one candidate channel.

    `improved` only says the with-channel arm scored better on average;
    the p-value says whether that difference looks like more than noise.
    """

    candidate: str
    smape_with: dict[str, float]
    smape_without: dict[str, float]
    p_value: float
    note: str = CAVEAT

    @property
    def deltas(self) -> dict[str, float]:
        return {
            sid: self.smape_with[sid] - self.smape_without[sid]
            for sid in self.smape_with
        }

    @property
    def mean_delta(self) -> float:
        return mean(self.deltas.values())

    @property
    def median_delta(self) -> float:
        return median(self.deltas.values())

    @property
    def improved(self) -> bool:
        return self.mean_delta < 0

    def to_csv(self) -> str:
        lines = ["series_id,smape_with,smape_without,delta"]
        for sid in sorted(self.smape_with):
            lines.append(
                f"{sid},{self.smape_with[sid]!r},{self.smape_without[sid]!r},"
                f"{self.deltas[sid]!r}"
            )
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {
            "candidate": self.candidate,
            "series": [
                {
                    "id": sid,
                    "smape_with": self.smape_with[sid],
                    "smape_without": self.smape_without[sid],
                    "delta": self.deltas[sid],
                }
                for sid in sorted(self.smape_with)
            ],
            "mean_delta": self.mean_delta,
            "median_delta": self.median_delta,
            "p_value": self.p_value,
            "improved": self.improved,
            "note": self.note,
        }


def gc_compare(
    panel: Panel,
    config: PipelineConfig,
    candidate: str | None = None,
    split_spec: SplitSpec = SplitSpec(),
    without_config: PipelineConfig | None = None,
) -> GCReport:
    """Fit with-channel and without-channel arms under identical seeds and
    compare their held-out sMAPE per series.

    The with-arm is `config` as given; the without-arm is the same config
    minus the candidate channel (any other exogenous channels stay in both
    arms as reference factors). A custom without-arm must share the master
    seed and ensemble size, otherwise the comparison would mix training
    noise into the answer.
    """
    if not config.exogenous_names:
        raise ConfigError("the with-arm config names no exogenous channel")
    if candidate is None:
        if len(config.exogenous_names) > 1:
            raise ConfigError(
                "several exogenous channels are configured; name the candidate"
            )
        candidate = config.exogenous_names[0]
    if candidate not in config.exogenous_names:
        raise ConfigError(f"candidate {candidate!r} is not among the configured channels")

    if without_config is None:
        remaining = tuple(n for n in config.exogenous_names if n != candidate)
        without_config = PipelineConfig(
            paradigm=config.paradigm,
            grouping=config.grouping,
            window=config.window,
            network=config.network,
            ensemble_seeds=config.ensemble_seeds,
            exogenous_names=remaining,
        )
    if (
        without_config.network.seed != config.network.seed
        or without_config.ensemble_seeds != config.ensemble_seeds
    ):
        raise ConfigError("the two arms must share seeds for a fair comparison")

    train_panel, test_panel = split(panel, split_spec)
    horizon = min(split_spec.test_length, config.window.output_size)

    smapes: list[dict[str, float]] = []
    for arm in (config, without_config):
        model = fit(train_panel, arm)
        bundle = forecast(model, train_panel, horizon)
        smapes.append(
            {
                sid: smape(fc.ensemble, test_panel.series[sid].values[:horizon])
                for sid, fc in bundle.series.items()
            }
        )
    smape_with, smape_without = smapes
    p = wilcoxon_signed_rank(
        [smape_with[sid] for sid in sorted(smape_with)],
        [smape_without[sid] for sid in sorted(smape_with)],
    )
    return GCReport(
        candidate=candidate,
        smape_with=smape_with,
        smape_without=smape_without,
        p_value=p,
    )
