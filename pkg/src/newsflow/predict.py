"""Early visit-total prediction on top of the horizon regressions.

A `ModelRegistry` holds one fitted model per (section group, snapshot
horizon).  The registry is immutable in use: training builds a complete new
registry and the owner swaps the reference in one assignment, so a reader
can never observe half-updated state.  Every prediction is stamped with the
registry version and fingerprint it was served from, which is what the
mixed-state audit checks.

`RetrainScheduler` drives periodic retraining on a virtual clock: articles
enter the training corpus once their age covers the prediction target, and
a group whose corpus is still too small keeps its previous models.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .config import EngineConfig
from .events import ReferralClass
from .ingest import ArticleSeries, SeriesStore
from .regress import FeatureVector, LinearModel, fit_ols, stepwise_select

log = logging.getLogger(__name__)

GROUPS = ("news", "other")


class TooEarlyError(ValueError):
    """The article is younger than the smallest prediction horizon."""


class ModelUnavailableError(LookupError):
    """No trained model exists yet for the requested group and horizon."""


def snapshot_features(
    series: ArticleSeries, cutoff_minutes: int, config: EngineConfig | None = None
) -> FeatureVector:
    """Feature vector from data strictly before the cutoff minute.

    Minute indices count from the article's first observed visit; a tweet or
    share landing exactly on the cutoff boundary is excluded.
    """
    config = config or EngineConfig()
    if series.origin_minute is None:
        raise ValueError("article has no visits yet")
    if cutoff_minutes < 0:
        raise ValueError(f"cutoff must be non-negative, got {cutoff_minutes}")
    before_ts = (series.origin_minute + cutoff_minutes) * 60
    stats = series.tweet_stats(config, before_ts=before_ts)
    fb_shares = series.shares_at(cutoff_minutes - 1) if cutoff_minutes > 0 else 0
    return FeatureVector(
        visits=series.total_visits(cutoff_minutes),
        referral_visits=series.class_visits(ReferralClass.EXTERNAL, cutoff_minutes),
        direct_visits=series.class_visits(ReferralClass.DIRECT, cutoff_minutes),
        fb_shares=fb_shares,
        tweets=stats["tweets"],
        mean_followers=stats["mean_followers"],
        tweet_entropy=stats["tweet_entropy"],
        unique_tweets=stats["unique_tweets"],
        unique_fraction=stats["unique_fraction"],
        corporate_fraction=stats["corporate_fraction"],
        cutoff_minutes=cutoff_minutes,
        article_id=series.article_id,
        section_label=series.section_label,
    )


@dataclass
class ModelRegistry:
    """Complete model set swapped in as a unit after each rebuild."""

    models: dict[str, dict[int, LinearModel]]
    version: int = 0
    trained_at_ts: int = 0
    training_counts: dict[str, int] = field(default_factory=dict)

    def model_for(self, group: str, horizon: int) -> LinearModel | None:
        return self.models.get(group, {}).get(horizon)

    @property
    def fingerprint(self) -> str:
        payload = {
            "version": self.version,
            "models": {
                group: {str(h): model.fingerprint() for h, model in per.items()}
                for group, per in self.models.items()
            },
        }
        digest = hashlib.sha256(json.dumps(payload, sort_keys=True).encode())
        return digest.hexdigest()[:16]

    def summary(self) -> dict:
        return {
            "version": self.version,
            "fingerprint": self.fingerprint,
            "trained_at_ts": self.trained_at_ts,
            "training_counts": dict(self.training_counts),
            "models": {
                group: {
                    str(h): {
                        "r_squared": model.r_squared,
                        "terms_retained": model.k_active,
                        "n": model.n,
                    }
                    for h, model in per.items()
                }
                for group, per in self.models.items()
            },
        }


def empty_registry() -> ModelRegistry:
    return ModelRegistry(models={group: {} for group in GROUPS})


def _group_of(series: ArticleSeries, config: EngineConfig) -> str:
    return config.group_for_section(series.section_label)


def train_horizon_models(
    articles,
    config: EngineConfig | None = None,
    previous: ModelRegistry | None = None,
    now_ts: int = 0,
) -> ModelRegistry:
    """Fit fresh models for every group and horizon from matured articles.

    Articles are grouped by section; a group below the minimum corpus size
    keeps the previous registry's models for that group.  An empty corpus
    returns the previous registry untouched.  Training order is canonical
    (sorted by article id) so a rebuilt corpus refits to identical
    coefficients.
    """
    config = config or EngineConfig()
    previous = previous or empty_registry()
    articles = sorted(articles, key=lambda s: s.article_id)
    if not articles:
        log.warning("retrain skipped: empty training corpus")
        return previous

    grouped: dict[str, list[ArticleSeries]] = {group: [] for group in GROUPS}
    for series in articles:
        grouped[_group_of(series, config)].append(series)

    models: dict[str, dict[int, LinearModel]] = {}
    counts: dict[str, int] = {}
    for group in GROUPS:
        members = grouped[group]
        counts[group] = len(members)
        if len(members) < config.min_training_articles:
            models[group] = dict(previous.models.get(group, {}))
            log.warning(
                "group %r has %d matured articles (< %d); keeping previous models",
                group,
                len(members),
                config.min_training_articles,
            )
            continue
        y = np.log1p(
            [float(s.total_visits(config.training_target_minutes)) for s in members]
        )
        per_horizon: dict[int, LinearModel] = {}
        for horizon in config.horizons_minutes:
            raw = np.vstack(
                [snapshot_features(s, horizon, config).as_array() for s in members]
            )
            if config.use_stepwise:
                per_horizon[horizon] = stepwise_select(raw, y)
            else:
                per_horizon[horizon] = fit_ols(raw, y)
        models[group] = per_horizon

    return ModelRegistry(
        models=models,
        version=previous.version + 1,
        trained_at_ts=now_ts,
        training_counts=counts,
    )


@dataclass(frozen=True)
class Prediction:
    article_id: str
    group: str
    horizon_minutes: int
    generated_at_ts: int
    observed_visits: int
    predicted_total: float
    model_version: int
    model_fingerprint: str

    def to_dict(self) -> dict:
        return {
            "article_id": self.article_id,
            "group": self.group,
            "horizon_minutes": self.horizon_minutes,
            "generated_at_ts": self.generated_at_ts,
            "observed_visits": self.observed_visits,
            "predicted_total": self.predicted_total,
            "model_version": self.model_version,
            "model_fingerprint": self.model_fingerprint,
        }

    def to_json_line(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def predict_article(
    registry: ModelRegistry,
    series: ArticleSeries,
    now_ts: int,
    config: EngineConfig | None = None,
) -> Prediction:
    """Predict the article's visit total using the deepest covered horizon.

    The prediction never undershoots the visits already observed.
    """
    config = config or EngineConfig()
    if series.origin_minute is None:
        raise ValueError("article has no visits yet")
    age_minutes = (now_ts - series.first_visit_ts) // 60
    eligible = [h for h in config.horizons_minutes if h <= age_minutes]
    if not eligible:
        raise TooEarlyError(
            f"article {series.article_id} is {age_minutes} min old; "
            f"smallest horizon is {min(config.horizons_minutes)}"
        )
    horizon = max(eligible)
    group = _group_of(series, config)
    model = registry.model_for(group, horizon)
    if model is None:
        raise ModelUnavailableError(
            f"no model for group {group!r} at horizon {horizon}"
        )
    raw = snapshot_features(series, horizon, config).as_array()
    observed = series.total_visits(max(age_minutes, 0))
    predicted = float(model.predict_total(raw, observed)[0])
    return Prediction(
        article_id=series.article_id,
        group=group,
        horizon_minutes=horizon,
        generated_at_ts=now_ts,
        observed_visits=int(observed),
        predicted_total=predicted,
        model_version=registry.version,
        model_fingerprint=registry.fingerprint,
    )


def evaluate_models(
    registry: ModelRegistry, articles, config: EngineConfig | None = None
) -> dict:
    """r-squared of each registry model on the given articles (log scale).

    Pass held-out articles for an honest score; entries without a model or
    with fewer than two scoreable articles come back as None.
    """
    config = config or EngineConfig()
    grouped: dict[str, list[ArticleSeries]] = {group: [] for group in GROUPS}
    for series in articles:
        grouped[_group_of(series, config)].append(series)
    scores: dict[str, dict[int, float | None]] = {}
    for group in GROUPS:
        members = sorted(grouped[group], key=lambda s: s.article_id)
        scores[group] = {}
        y = np.log1p(
            [float(s.total_visits(config.training_target_minutes)) for s in members]
        )
        for horizon in config.horizons_minutes:
            model = registry.model_for(group, horizon)
            if model is None or len(members) < 2:
                scores[group][horizon] = None
                continue
            raw = np.vstack(
                [snapshot_features(s, horizon, config).as_array() for s in members]
            )
            predicted = model.predict_transformed(raw)
            tss = float(np.sum((y - y.mean()) ** 2))
            if tss <= 0.0:
                scores[group][horizon] = None
                continue
            rss = float(np.sum((y - predicted) ** 2))
            scores[group][horizon] = 1.0 - rss / tss
    return scores


class RetrainScheduler:
    """Virtual-clock retraining: one rebuild attempt per elapsed period.

    The first tick sets the baseline; each time a full period has passed the
    scheduler pulls newly matured articles into its training corpus and
    rebuilds the registry.  `retrain_count` counts rebuild attempts (the
    registry version only advances when the corpus was non-empty).
    """

    def __init__(
        self, config: EngineConfig | None = None, registry: ModelRegistry | None = None
    ) -> None:
        self.config = config or EngineConfig()
        self.registry = registry or empty_registry()
        self.last_retrain_ts: int | None = None
        self.retrain_count = 0
        self.matured_ids: set[str] = set()

    def _collect_matured(self, store: SeriesStore, now_ts: int, candidate_ids) -> None:
        target = self.config.training_target_minutes
        for article_id in candidate_ids:
            if article_id in self.matured_ids:
                continue
            series = store.articles.get(article_id)
            if series is None or series.origin_minute is None:
                continue
            if (now_ts - series.first_visit_ts) // 60 >= target:
                self.matured_ids.add(article_id)

    def tick(self, store: SeriesStore, now_ts: int, candidate_ids=None) -> bool:
        """Advance the clock; returns True when a retrain attempt ran."""
        if self.last_retrain_ts is None:
            self.last_retrain_ts = now_ts
            return False
        period_seconds = self.config.retrain_period_minutes * 60
        if now_ts - self.last_retrain_ts < period_seconds:
            return False
        self.last_retrain_ts = now_ts
        if candidate_ids is None:
            candidate_ids = store.monitored_articles(now_ts)
        self._collect_matured(store, now_ts, candidate_ids)
        self.retrain_count += 1
        corpus = [store.articles[aid] for aid in sorted(self.matured_ids)]
        self.registry = train_horizon_models(
            corpus, self.config, previous=self.registry, now_ts=now_ts
        )
        return True

    def state(self) -> dict:
        return {
            "last_retrain_ts": self.last_retrain_ts,
            "retrain_count": self.retrain_count,
            "matured_ids": sorted(self.matured_ids),
            "registry_version": self.registry.version,
        }
