"""Durable replayable engine service.

The service owns three on-disk artifacts inside its data directory:

* ``events.log``   - append-only canonical event lines, exactly as received;
* ``snapshot.pkl`` - an atomic checkpoint of in-memory state plus the log
                     offset it covers;
* ``predictions.jsonl`` - append-only prediction records, one JSON line per
                     (article, horizon) emission.

Processing runs on a virtual clock derived purely from event timestamps: a
tick fires at every five-minute boundary the stream crosses, and each tick
latches newly monitored articles, gives the retraining scheduler a chance
to rebuild models, and emits any predictions whose horizon the articles
have just crossed.  Because every decision is a function of the event
stream alone, restarting from a snapshot plus the remaining events
reproduces the prediction log byte for byte.
"""

from __future__ import annotations

import json
import logging
import os
import pickle
import time
from pathlib import Path

from .config import EngineConfig, load_config, save_config
from .events import Event, format_event_line, parse_event_line
from .ingest import SeriesStore, monitoring_filter
from .predict import (
    ModelUnavailableError,
    Prediction,
    RetrainScheduler,
    TooEarlyError,
    predict_article,
)

log = logging.getLogger(__name__)

TICK_SECONDS = 300

EVENTS_LOG = "events.log"
SNAPSHOT_FILE = "snapshot.pkl"
PREDICTIONS_FILE = "predictions.jsonl"
CONFIG_FILE = "config.json"


class EngineService:
    """Single-writer engine over a data directory."""

    def __init__(self, data_dir, config: EngineConfig | None = None) -> None:
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        config_path = self.data_dir / CONFIG_FILE
        if config is None:
            config = load_config(config_path) if config_path.exists() else EngineConfig()
        if not config_path.exists():
            save_config(config, config_path)
        self.config = config

        self.store = SeriesStore(config)
        self.scheduler = RetrainScheduler(config)
        self.latched: set[str] = set()
        self.emitted: set[tuple[str, int]] = set()
        self.next_tick: int | None = None
        self._touched: set[str] = set()
        self._log_offset = 0

        self.events_path = self.data_dir / EVENTS_LOG
        self.snapshot_path = self.data_dir / SNAPSHOT_FILE
        self.predictions_path = self.data_dir / PREDICTIONS_FILE

        self._load_emitted()
        if self.snapshot_path.exists():
            self._restore()
        self._events_fh = open(self.events_path, "a", encoding="utf-8")
        self._predictions_fh = open(self.predictions_path, "a", encoding="utf-8")
        self._replay_log_tail()

    # ----- persistence -----

    def _load_emitted(self) -> None:
        if not self.predictions_path.exists():
            return
        with open(self.predictions_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                self.emitted.add((record["article_id"], int(record["horizon_minutes"])))

    def _restore(self) -> None:
        with open(self.snapshot_path, "rb") as fh:
            state = pickle.load(fh)
        self.store = state["store"]
        self.store.config = self.config
        scheduler = RetrainScheduler(self.config, registry=state["registry"])
        scheduler.last_retrain_ts = state["last_retrain_ts"]
        scheduler.retrain_count = state["retrain_count"]
        scheduler.matured_ids = set(state["matured_ids"])
        self.scheduler = scheduler
        self.latched = set(state["latched"])
        self.next_tick = state["next_tick"]
        self._touched = set(state["touched"])
        self._log_offset = int(state["log_offset"])
        log.info(
            "restored snapshot: %d articles, registry v%d, log offset %d",
            len(self.store.articles),
            self.scheduler.registry.version,
            self._log_offset,
        )

    def _replay_log_tail(self) -> None:
        if not self.events_path.exists():
            return
        size = self.events_path.stat().st_size
        if size <= self._log_offset:
            return
        n = 0
        with open(self.events_path, encoding="utf-8") as fh:
            fh.seek(self._log_offset)
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                self._process(parse_event_line(line), record=False)
                n += 1
        self._log_offset = size
        log.info("replayed %d logged events past the snapshot", n)

    def snapshot(self) -> None:
        """Atomically checkpoint state; the log offset marks what it covers."""
        self._events_fh.flush()
        self._log_offset = self.events_path.stat().st_size
        state = {
            "store": self.store,
            "registry": self.scheduler.registry,
            "last_retrain_ts": self.scheduler.last_retrain_ts,
            "retrain_count": self.scheduler.retrain_count,
            "matured_ids": sorted(self.scheduler.matured_ids),
            "latched": sorted(self.latched),
            "next_tick": self.next_tick,
            "touched": sorted(self._touched),
            "log_offset": self._log_offset,
        }
        tmp_path = self.snapshot_path.with_suffix(".tmp")
        with open(tmp_path, "wb") as fh:
            pickle.dump(state, fh)
        os.replace(tmp_path, self.snapshot_path)

    def close(self) -> None:
        self._events_fh.close()
        self._predictions_fh.close()

    # ----- event processing -----

    def submit(self, event: Event) -> None:
        """Ingest one externally supplied event (logged durably)."""
        self._process(event, record=True)

    def _process(self, event: Event, record: bool) -> None:
        if self.next_tick is None:
            self.next_tick = (event.ts // TICK_SECONDS) * TICK_SECONDS
        while self.next_tick <= event.ts:
            self._run_tick(self.next_tick)
            self.next_tick += TICK_SECONDS
        if record:
            self._events_fh.write(format_event_line(event))
            self._events_fh.write("\n")
        self.store.ingest(event)
        self._touched.add(event.article_id)

    def _run_tick(self, tick_ts: int, retrain: bool = True) -> None:
        for article_id in sorted(self._touched):
            if article_id in self.latched:
                continue
            series = self.store.articles.get(article_id)
            if series is None or series.origin_minute is None:
                continue
            if monitoring_filter(series, tick_ts, self.config):
                self.latched.add(article_id)
        self._touched.clear()

        if retrain:
            self.scheduler.tick(self.store, tick_ts, candidate_ids=sorted(self.latched))

        registry = self.scheduler.registry
        if registry.version < 1:
            return
        min_horizon = min(self.config.horizons_minutes)
        for article_id in sorted(self.latched):
            series = self.store.articles[article_id]
            age_minutes = (tick_ts - series.first_visit_ts) // 60
            if age_minutes < min_horizon:
                continue
            horizon = max(h for h in self.config.horizons_minutes if h <= age_minutes)
            key = (article_id, horizon)
            if key in self.emitted:
                continue
            try:
                prediction = predict_article(registry, series, tick_ts, self.config)
            except (TooEarlyError, ModelUnavailableError):
                continue
            self._predictions_fh.write(prediction.to_json_line())
            self._predictions_fh.write("\n")
            self.emitted.add(key)
        self._predictions_fh.flush()

    def finalize(self) -> None:
        """Run the single trailing tick that covers the stream's tail.

        The trailing tick latches and emits predictions but never retrains:
        model rebuilds stay on the daily in-stream cadence instead of firing
        off a partial final window.
        """
        if self.next_tick is not None:
            self._run_tick(self.next_tick, retrain=False)
            self.next_tick += TICK_SECONDS
        self._events_fh.flush()
        self._predictions_fh.flush()

    def replay(self, events, speed: float = 0.0, finalize: bool = True) -> int:
        """Feed a time-ordered event stream through the service.

        speed 0 replays as fast as possible; speed s > 0 scales event gaps
        to wall time divided by s (1.0 is real time).
        """
        n = 0
        previous_ts = None
        for event in events:
            if speed > 0 and previous_ts is not None and event.ts > previous_ts:
                time.sleep((event.ts - previous_ts) / speed)
            previous_ts = event.ts
            self.submit(event)
            n += 1
        if finalize:
            self.finalize()
        return n

    # ----- queries -----

    def predict_now(self, article_id: str) -> Prediction:
        series = self.store.articles.get(article_id)
        if series is None:
            raise KeyError(f"unknown article: {article_id}")
        return predict_article(
            self.scheduler.registry, series, self.store.clock, self.config
        )

    def article_summary(self, article_id: str) -> dict:
        series = self.store.articles.get(article_id)
        if series is None:
            raise KeyError(f"unknown article: {article_id}")
        summary = {
            "article_id": article_id,
            "section": series.section_label,
            "monitored": article_id in self.latched,
            "total_visits": series.total_visits(),
            "tweets": len(series.tweets_sorted()),
            "shares": series.shares_at(series.n_minutes - 1) if series.n_minutes else 0,
        }
        if series.origin_minute is not None:
            summary["first_visit_ts"] = series.first_visit_ts
            summary["age_minutes"] = max(
                (self.store.clock - series.first_visit_ts) // 60, 0
            )
        return summary

    def status(self) -> dict:
        return {
            "articles": len(self.store.articles),
            "monitored": len(self.latched),
            "clock": self.store.clock,
            "counts": dict(self.store.counts),
            "diagnostics": dict(self.store.diagnostics),
            "registry": self.scheduler.registry.summary(),
            "retrain_count": self.scheduler.retrain_count,
        }
