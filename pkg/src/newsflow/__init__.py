"""Streaming analytics for online news article life cycles.

The package follows an article from its first page view: per-minute visit
series fused with tweet and Facebook-share reactions, shelf-life and visit
profile classification over activity-adjusted time, and early predictions
of the eventual visit total from periodically retrained linear models.
"""

from .config import ClassifierConfig, EngineConfig
from .events import (
    EventFormatError,
    ReactionEvent,
    ReferralClass,
    VisitEvent,
    parse_event_line,
    read_events,
    write_events,
)
from .ingest import ArticleSeries, SeriesStore, replay_events
from .lifecycle import SeasonalityProfile, classify_profile, shelf_life
from .predict import (
    ModelRegistry,
    Prediction,
    RetrainScheduler,
    predict_article,
    snapshot_features,
    train_horizon_models,
)
from .regress import FeatureVector, LinearModel, fit_ols, stepwise_select
from .service import EngineService
from .simgen import Blueprint, CorpusSpec, SocialCoupling, corpus_event_stream

__version__ = "0.1.0"

__all__ = [
    "ArticleSeries",
    "Blueprint",
    "ClassifierConfig",
    "CorpusSpec",
    "EngineConfig",
    "EngineService",
    "EventFormatError",
    "FeatureVector",
    "LinearModel",
    "ModelRegistry",
    "Prediction",
    "ReactionEvent",
    "ReferralClass",
    "RetrainScheduler",
    "SeasonalityProfile",
    "SeriesStore",
    "SocialCoupling",
    "VisitEvent",
    "classify_profile",
    "corpus_event_stream",
    "fit_ols",
    "parse_event_line",
    "predict_article",
    "read_events",
    "replay_events",
    "shelf_life",
    "snapshot_features",
    "stepwise_select",
    "train_horizon_models",
    "write_events",
]
