"""HTTP interface over a running engine service."""

from __future__ import annotations

import json
import logging

from fastapi import FastAPI, HTTPException

from .events import EventFormatError, parse_event_line
from .predict import ModelUnavailableError, TooEarlyError
from .service import EngineService

log = logging.getLogger(__name__)


def create_app(service: EngineService) -> FastAPI:
    app = FastAPI(title="newsflow", version="1.0")

    def _series_or_404(article_id: str):
        series = service.store.articles.get(article_id)
        if series is None:
            raise HTTPException(status_code=404, detail=f"unknown article: {article_id}")
        return series

    @app.post("/events")
    def post_events(payload: dict):
        """Accept one event object, or {"events": [...]} for a batch."""
        if "events" in payload:
            if not isinstance(payload["events"], list):
                raise HTTPException(status_code=422, detail="events must be a list")
            raw_events = payload["events"]
        else:
            raw_events = [payload]
        parsed = []
        for record in raw_events:
            try:
                parsed.append(parse_event_line(json.dumps(record)))
            except (EventFormatError, TypeError) as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from None
        for event in parsed:
            service.submit(event)
        return {"accepted": len(parsed)}

    @app.get("/healthz")
    def healthz():
        status = service.status()
        return {
            "status": "ok",
            "articles": status["articles"],
            "clock": status["clock"],
            "registry_version": status["registry"]["version"],
        }

    @app.get("/articles")
    def list_articles(monitored_only: bool = True, limit: int = 100):
        ids = (
            sorted(service.latched)
            if monitored_only
            else sorted(service.store.articles)
        )
        return {
            "total": len(ids),
            "articles": [service.article_summary(a) for a in ids[: max(limit, 0)]],
        }

    @app.get("/articles/{article_id}")
    def article_detail(article_id: str):
        _series_or_404(article_id)
        return service.article_summary(article_id)

    @app.get("/articles/{article_id}/series")
    def article_series(article_id: str, granularity: str = "minute"):
        series = _series_or_404(article_id)
        if series.origin_minute is None:
            raise HTTPException(status_code=409, detail="article has no visits yet")
        visits = series.visit_series()
        if granularity == "hour":
            n_hours = (len(visits) + 59) // 60
            padded = list(visits) + [0] * (n_hours * 60 - len(visits))
            values = [
                int(sum(padded[h * 60 : (h + 1) * 60])) for h in range(n_hours)
            ]
        elif granularity == "minute":
            values = [int(v) for v in visits]
        else:
            raise HTTPException(
                status_code=422, detail="granularity must be 'minute' or 'hour'"
            )
        return {
            "article_id": article_id,
            "granularity": granularity,
            "first_visit_ts": series.first_visit_ts,
            "visits": values,
        }

    @app.get("/articles/{article_id}/prediction")
    def article_prediction(article_id: str):
        _series_or_404(article_id)
        try:
            prediction = service.predict_now(article_id)
        except TooEarlyError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None
        except ModelUnavailableError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None
        return prediction.to_dict()

    @app.get("/models")
    def models():
        return service.scheduler.registry.summary()

    return app
