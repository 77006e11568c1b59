"""Read-only HTTP gateway over one trained model.

All forecasting work happens once at startup; request handlers only look up
precomputed state or run the (deterministic, training-free) what-if pass.
Months serialize as "YYYY-MM" everywhere.
"""

from __future__ import annotations

from typing import Any

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .causal import Scenario, whatif
from .errors import NoExogenousError, NotFittedError, PanelcastError
from .metrics import EvalReport, SeriesScore, aggregate, mase, smape
from .panel import Panel
from .pipeline import ForecastBundle, TrainedModel, forecast


class WhatIfRequest(BaseModel):
    exogenous: str
    multiplier: float = Field(gt=0)
    series: list[str] | None = None


def _series_payload(panel: Panel, sid: str, bundle: ForecastBundle) -> dict[str, Any]:
    ts = panel.series[sid]
    fc = bundle.series[sid]
    return {
        "id": sid,
        "category": ts.category,
        "history": {
            "months": [str(m) for m in ts.months()],
            "values": [float(v) for v in ts.values],
        },
        "forecast": {
            "months": [str(m) for m in fc.months],
            "values": [float(v) for v in fc.ensemble],
        },
    }


def _startup_metrics(
    model: TrainedModel, panel: Panel, bundle: ForecastBundle
) -> EvalReport | None:
    """Score the baseline forecasts against any panel months that extend past
    the training region; None when the panel carries no such months."""
    scores = []
    for sid, fc in bundle.series.items():
        rec = model.series[sid]
        ts = panel.series[sid]
        overlap = ts.index_of(rec.train_end) + 1
        actual = ts.values[overlap:]
        if actual.size == 0:
            return None
        m = min(actual.size, fc.ensemble.size)
        train_values = ts.values[:overlap]
        scores.append(
            SeriesScore(
                series_id=sid,
                smape=smape(fc.ensemble[:m], actual[:m]),
                mase=mase(fc.ensemble[:m], actual[:m], train_values, model.frequency),
            )
        )
    label = f"{model.config.paradigm.value}-{model.config.grouping.value}"
    return aggregate(scores, method=label)


def create_app(
    model: TrainedModel, panel: Panel, metrics: EvalReport | None = None
) -> FastAPI:
    """Build the service around an immutable model snapshot.

    The panel supplies display history (and, when it extends past the
    training region, evaluation metrics); forecasts always condition on the
    fit-time state, so serving the full panel leaks nothing.
    """
    known = [sid for sid in panel.series if sid in model.series]
    serve_panel = Panel(
        series={sid: panel.series[sid] for sid in known},
        exogenous={
            name: {sid: ch[sid] for sid in known if sid in ch}
            for name, ch in panel.exogenous.items()
        },
        frequency=panel.frequency,
    )
    baseline = forecast(model, serve_panel, model.config.window.output_size)
    if metrics is None:
        metrics = _startup_metrics(model, serve_panel, baseline)

    app = FastAPI(title="panelcast", docs_url=None, redoc_url=None)

    @app.exception_handler(PanelcastError)
    async def on_domain_error(request, exc: PanelcastError):
        status = 404 if isinstance(exc, NotFittedError) else 400
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.get("/api/series")
    def list_series() -> list[dict[str, str]]:
        return [
            {"id": sid, "category": serve_panel.series[sid].category}
            for sid in serve_panel.series
        ]

    @app.get("/api/series/{sid}")
    def get_series(sid: str) -> dict[str, Any]:
        if sid not in serve_panel.series:
            raise NotFittedError(f"unknown series {sid!r}")
        return _series_payload(serve_panel, sid, baseline)

    @app.post("/api/whatif")
    def post_whatif(body: WhatIfRequest) -> dict[str, Any]:
        ids = tuple(body.series) if body.series is not None else None
        scenario = Scenario(
            exogenous=body.exogenous, multiplier=body.multiplier, series_ids=ids
        )
        result = whatif(model, scenario, model.config.window.output_size)
        return result.to_json()

    @app.get("/api/metrics")
    def get_metrics() -> dict[str, Any]:
        if metrics is None:
            return JSONResponse(
                status_code=404,
                content={
                    "error": "NoMetrics",
                    "detail": "the served panel has no months past the training region",
                },
            )
        return {
            "method": metrics.method,
            "mean_smape": metrics.mean_smape,
            "median_smape": metrics.median_smape,
            "mean_mase": metrics.mean_mase,
            "median_mase": metrics.median_mase,
            "series": [
                {"id": s.series_id, "smape": s.smape, "mase": s.mase}
                for s in sorted(metrics.scores, key=lambda s: s.series_id)
            ],
        }

    return app
