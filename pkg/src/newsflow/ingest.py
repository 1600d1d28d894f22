"""Event ingestion and per-article minute series.

Articles keep a dense per-minute grid of visit counts split by referral class,
anchored at the minute of the earliest visit seen so far.  Arrival order does
not matter: a visit earlier than the current anchor rebases the grid backwards,
and all social-side derived values are computed over time-sorted logs, so any
replay permutation converges to the same state.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from urllib.parse import urlsplit

import numpy as np

from .config import EngineConfig
from .events import Event, ReactionEvent, ReferralClass, VisitEvent
from .social import (
    UniquenessTracker,
    clamp_monotone,
    interpolate_share_deltas,
    is_corporate_retweet,
    normalize_tweet,
    shares_known_at,
    update_term_histogram,
    vocabulary_entropy,
)
from .timeutil import epoch_minute

log = logging.getLogger(__name__)

_N_CLASSES = len(ReferralClass)
_INITIAL_CAPACITY = 64


def classify_referral(
    url: str, config: EngineConfig, diagnostics: Counter | None = None
) -> ReferralClass:
    """Bucket a referral URL: our own site, a search engine, elsewhere, or none.

    Never raises; a URL the parser rejects counts as external (and, when a
    diagnostics counter is passed, bumps "unparseable_referral").
    """
    if not url:
        return ReferralClass.DIRECT
    try:
        host = urlsplit(url).netloc.lower()
    except ValueError:
        if diagnostics is not None:
            diagnostics["unparseable_referral"] += 1
        return ReferralClass.EXTERNAL
    if "@" in host:
        host = host.rsplit("@", 1)[1]
    host = host.split(":", 1)[0]
    if not host:
        return ReferralClass.DIRECT
    for site in config.site_hosts:
        site = site.lower()
        if host == site or host.endswith("." + site):
            return ReferralClass.INTERNAL
    for engine in config.search_hosts:
        engine = engine.lower()
        if host == engine or host.endswith("." + engine):
            return ReferralClass.SEARCH
    return ReferralClass.EXTERNAL


def normalize_section_label(section: str) -> str:
    cleaned = "".join(ch for ch in section.lower() if ch.isalnum())
    if cleaned == "news":
        return "news"
    if cleaned == "indepth":
        return "indepth"
    return "other"


@dataclass
class TweetRecord:
    ts: int
    normalized: str
    corporate: bool
    followers: int
    friends: int
    statuses: int

    def sort_key(self):
        return (self.ts, self.normalized, self.followers, self.friends, self.statuses)


class ArticleSeries:
    """Minute-resolution state for one article."""

    def __init__(self, article_id: str, section: str = "") -> None:
        self.article_id = article_id
        self.section = section
        self.origin_minute: int | None = None
        self._counts = np.zeros((_N_CLASSES, _INITIAL_CAPACITY), dtype=np.int32)
        self._length = 0
        self._tweets: list[TweetRecord] = []
        self._tweets_time_sorted = True
        self._tweet_version = 0
        self._unique_flags: list[bool] = []
        self._unique_version = -1
        self._fb_raw: list[tuple[int, int]] = []
        self._fb_time_sorted = True
        self._fb_cache: list[tuple[int, int]] | None = None

    @property
    def section_label(self) -> str:
        return normalize_section_label(self.section)

    @property
    def first_visit_ts(self) -> int | None:
        """First visit timestamp truncated to its minute, epoch seconds."""
        if self.origin_minute is None:
            return None
        return self.origin_minute * 60

    # ----- visits -----

    def observe_visit(self, ts: int, referral: ReferralClass) -> None:
        minute = epoch_minute(ts)
        if self.origin_minute is None:
            self.origin_minute = minute
        if minute < self.origin_minute:
            self._rebase(minute)
        index = minute - self.origin_minute
        if index >= self._counts.shape[1]:
            self._grow(index + 1)
        self._counts[referral.value, index] += 1
        if index + 1 > self._length:
            self._length = index + 1

    def _grow(self, needed: int) -> None:
        capacity = self._counts.shape[1]
        while capacity < needed:
            capacity *= 2
        grown = np.zeros((_N_CLASSES, capacity), dtype=np.int32)
        grown[:, : self._counts.shape[1]] = self._counts
        self._counts = grown

    def _rebase(self, new_origin: int) -> None:
        assert self.origin_minute is not None
        shift = self.origin_minute - new_origin
        needed = self._length + shift
        capacity = self._counts.shape[1]
        while capacity < needed:
            capacity *= 2
        grown = np.zeros((_N_CLASSES, capacity), dtype=np.int32)
        grown[:, shift : shift + self._length] = self._counts[:, : self._length]
        self._counts = grown
        self._length = needed
        self.origin_minute = new_origin

    @property
    def n_minutes(self) -> int:
        return self._length

    def visit_matrix(self, n_minutes: int | None = None) -> np.ndarray:
        """Per-class visit counts, shape (4, n); minute 0 is the first visit."""
        n = self._length if n_minutes is None else n_minutes
        if n <= self._length:
            return self._counts[:, :n].copy()
        padded = np.zeros((_N_CLASSES, n), dtype=np.int32)
        padded[:, : self._length] = self._counts[:, : self._length]
        return padded

    def visit_series(self, n_minutes: int | None = None) -> np.ndarray:
        """Total visits per minute, all referral classes combined."""
        return self.visit_matrix(n_minutes).sum(axis=0, dtype=np.int64)

    def total_visits(self, first_minutes: int | None = None) -> int:
        if first_minutes is None:
            first_minutes = self._length
        n = min(first_minutes, self._length)
        if n <= 0:
            return 0
        return int(self._counts[:, :n].sum())

    def class_visits(self, referral: ReferralClass, first_minutes: int | None = None) -> int:
        if first_minutes is None:
            first_minutes = self._length
        n = min(first_minutes, self._length)
        if n <= 0:
            return 0
        return int(self._counts[referral.value, :n].sum())

    def visits_in_window(self, now_ts: int, window_minutes: int) -> int:
        """Visits whose minute lies in (now - window, now], by wall clock."""
        if self.origin_minute is None:
            return 0
        now_minute = epoch_minute(now_ts)
        lo = max(now_minute - window_minutes + 1 - self.origin_minute, 0)
        hi = min(now_minute - self.origin_minute + 1, self._length)
        if hi <= lo:
            return 0
        return int(self._counts[:, lo:hi].sum())

    def max_window_visits(self, window_minutes: int, now_ts: int | None = None) -> int:
        """Largest visit count over any sliding window of the given width."""
        if self.origin_minute is None or self._length == 0:
            return 0
        n = self._length
        if now_ts is not None:
            n = min(n, epoch_minute(now_ts) - self.origin_minute + 1)
        if n <= 0:
            return 0
        cum = np.cumsum(self.visit_series(n))
        w = window_minutes
        best = int(cum[min(w, n) - 1])
        if n > w:
            best = max(best, int((cum[w:] - cum[:-w]).max()))
        return best

    # ----- tweets -----

    def observe_tweet(
        self, ts: int, text: str, followers: int, friends: int, statuses: int,
        corporate_handles=("AJEnglish", "AJELive"),
    ) -> None:
        record = TweetRecord(
            ts=ts,
            normalized=normalize_tweet(text),
            corporate=is_corporate_retweet(text, corporate_handles),
            followers=followers,
            friends=friends,
            statuses=statuses,
        )
        if self._tweets and ts < self._tweets[-1].ts:
            self._tweets_time_sorted = False
        self._tweets.append(record)
        self._tweet_version += 1

    def tweets_sorted(self) -> list[TweetRecord]:
        if not self._tweets_time_sorted:
            self._tweets.sort(key=TweetRecord.sort_key)
            self._tweets_time_sorted = True
        return self._tweets

    def unique_flags(self, threshold: int = 10) -> list[bool]:
        """Per-tweet uniqueness verdicts, aligned with tweets_sorted()."""
        if self._unique_version != self._tweet_version:
            tracker = UniquenessTracker(threshold)
            self._unique_flags = [
                tracker.observe(record.normalized) for record in self.tweets_sorted()
            ]
            self._unique_version = self._tweet_version
        return self._unique_flags

    # ----- facebook -----

    def observe_share_snapshot(self, ts: int, count: int) -> None:
        if self._fb_raw and ts < self._fb_raw[-1][0]:
            self._fb_time_sorted = False
        self._fb_raw.append((ts, count))
        self._fb_cache = None

    def share_snapshots(self) -> list[tuple[int, int]]:
        """Clamped cumulative snapshots as (minute-index, count), one per minute.

        Reported counts occasionally dip (caches upstream); the running
        maximum repairs those, and multiple polls within a minute collapse to
        the final clamped value.  Minute indexes are relative to the article
        origin; snapshots seen before any visit clamp to index 0.
        """
        if self._fb_cache is None:
            if not self._fb_time_sorted:
                self._fb_raw.sort()
                self._fb_time_sorted = True
            origin = self.origin_minute if self.origin_minute is not None else 0
            clamped = clamp_monotone(count for _, count in self._fb_raw)
            per_minute: list[tuple[int, int]] = []
            for (ts, _), value in zip(self._fb_raw, clamped):
                minute = max(epoch_minute(ts) - origin, 0)
                if per_minute and per_minute[-1][0] == minute:
                    per_minute[-1] = (minute, value)
                else:
                    per_minute.append((minute, value))
            self._fb_cache = per_minute
        return self._fb_cache

    def shares_at(self, minute: int) -> int:
        """Interpolated cumulative Facebook shares through a minute index."""
        return shares_known_at(self.share_snapshots(), minute)

    def clamp_violations(self) -> int:
        """How many snapshots reported a count below an earlier one."""
        if not self._fb_time_sorted:
            self._fb_raw.sort()
            self._fb_time_sorted = True
        violations = 0
        high = 0
        for _, count in self._fb_raw:
            if count < high:
                violations += 1
            else:
                high = count
        return violations

    # ----- per-minute derived arrays -----

    def tweet_minute_counts(self, n_minutes: int, threshold: int = 10) -> dict[str, np.ndarray]:
        """Dense per-minute tweet counters: total, unique, corporate."""
        origin = self.origin_minute if self.origin_minute is not None else (
            epoch_minute(self._tweets[0].ts) if self._tweets else 0
        )
        tweets = np.zeros(n_minutes, dtype=np.int32)
        unique = np.zeros(n_minutes, dtype=np.int32)
        corporate = np.zeros(n_minutes, dtype=np.int32)
        flags = self.unique_flags(threshold)
        for record, is_unique in zip(self.tweets_sorted(), flags):
            index = epoch_minute(record.ts) - origin
            if 0 <= index < n_minutes:
                tweets[index] += 1
                if is_unique:
                    unique[index] += 1
                if record.corporate:
                    corporate[index] += 1
        return {"tweets": tweets, "unique_tweets": unique, "corporate_retweets": corporate}

    def share_delta_series(self, n_minutes: int) -> np.ndarray:
        """Interpolated per-minute Facebook share increments."""
        deltas = np.zeros(n_minutes, dtype=np.int64)
        for minute, delta in interpolate_share_deltas(self.share_snapshots()):
            if 0 <= minute < n_minutes:
                deltas[minute] += delta
        return deltas

    # ----- derived social stats -----

    def tweet_stats(self, config: EngineConfig, before_ts: int | None = None) -> dict:
        """Counts and aggregates over tweets with ts strictly below the cutoff."""
        histogram: Counter[str] = Counter()
        n = unique = corporate = 0
        follower_sum = friend_sum = status_sum = 0
        flags = self.unique_flags(config.unique_edit_threshold)
        for record, is_unique in zip(self.tweets_sorted(), flags):
            if before_ts is not None and record.ts >= before_ts:
                break
            n += 1
            if is_unique:
                unique += 1
            if record.corporate:
                corporate += 1
            update_term_histogram(histogram, record.normalized)
            follower_sum += record.followers
            friend_sum += record.friends
            status_sum += record.statuses
        return {
            "tweets": n,
            "unique_tweets": unique,
            "corporate_tweets": corporate,
            "unique_fraction": unique / n if n else 0.0,
            "corporate_fraction": corporate / n if n else 0.0,
            "mean_followers": follower_sum / n if n else 0.0,
            "mean_friends": friend_sum / n if n else 0.0,
            "mean_statuses": status_sum / n if n else 0.0,
            "tweet_entropy": vocabulary_entropy(histogram),
        }


def monitoring_filter(series: ArticleSeries, now_ts: int, config: EngineConfig) -> bool:
    """Has any sliding 10-hour window up to now held enough visits to monitor?"""
    return (
        series.max_window_visits(config.monitoring_window_minutes, now_ts)
        >= config.monitoring_min_visits
    )


def sample_filter(series: ArticleSeries, config: EngineConfig, truncated_ok: bool = False) -> bool:
    """Did the article draw enough first-week visits to enter analysis corpora?"""
    if series.origin_minute is None:
        raise ValueError("article has no visits yet")
    if not truncated_ok and series.n_minutes < config.sample_window_minutes:
        raise ValueError(
            f"series covers {series.n_minutes} min, "
            f"needs {config.sample_window_minutes}; pass truncated_ok to override"
        )
    return series.total_visits(config.sample_window_minutes) >= config.sample_min_visits


class SeriesStore:
    """All article series plus the ingestion clock and running diagnostics."""

    def __init__(self, config: EngineConfig | None = None) -> None:
        self.config = config or EngineConfig()
        self.articles: dict[str, ArticleSeries] = {}
        self.clock: int = 0
        self.counts: Counter[str] = Counter()
        self.diagnostics: Counter[str] = Counter()

    def get(self, article_id: str) -> ArticleSeries:
        series = self.articles.get(article_id)
        if series is None:
            series = ArticleSeries(article_id)
            self.articles[article_id] = series
        return series

    def ingest(self, event: Event) -> None:
        if event.ts < self.clock:
            self.diagnostics["out_of_order"] += 1
        else:
            self.clock = event.ts
        series = self.get(event.article_id)
        if isinstance(event, VisitEvent):
            if event.section and not series.section:
                series.section = event.section
            referral = classify_referral(event.referral_url, self.config, self.diagnostics)
            series.observe_visit(event.ts, referral)
            self.counts["visits"] += 1
        elif isinstance(event, ReactionEvent):
            if event.kind == "tweet":
                series.observe_tweet(
                    event.ts,
                    event.tweet_text,
                    event.author_followers,
                    event.author_friends,
                    event.author_statuses,
                    corporate_handles=self.config.corporate_handles,
                )
                self.counts["tweets"] += 1
            else:
                if series._fb_raw and event.share_count < max(c for _, c in series._fb_raw):
                    self.diagnostics["share_count_regressions"] += 1
                series.observe_share_snapshot(event.ts, event.share_count)
                self.counts["share_snapshots"] += 1
        else:
            raise TypeError(f"unknown event type: {type(event)!r}")

    def ingest_many(self, events) -> int:
        n = 0
        for event in events:
            self.ingest(event)
            n += 1
        return n

    # ----- selection -----

    def monitored_articles(self, now_ts: int) -> list[str]:
        """Articles that have ever qualified for live monitoring."""
        return sorted(
            article_id
            for article_id, series in self.articles.items()
            if monitoring_filter(series, now_ts, self.config)
        )

    def polling_schedule(self, window_end_ts: int) -> list[str]:
        """The articles whose social counters get polled this cycle.

        Top `polling_top_k` by visits over the five minutes before window_end;
        ties break on earlier first visit, then article id, so the schedule is
        reproducible.
        """
        cfg = self.config
        scored = []
        for article_id, series in self.articles.items():
            recent = series.visits_in_window(window_end_ts - 60, cfg.polling_window_minutes)
            if recent > 0:
                scored.append((-recent, series.origin_minute, article_id))
        scored.sort()
        return [article_id for _, _, article_id in scored[: cfg.polling_top_k]]

    def sample_articles(self) -> list[str]:
        """Articles with enough first-week traffic to be worth analyzing."""
        cfg = self.config
        return sorted(
            article_id
            for article_id, series in self.articles.items()
            if series.total_visits(cfg.sample_window_minutes) >= cfg.sample_min_visits
        )


@dataclass
class IngestSummary:
    events: int = 0
    articles: int = 0
    counts: dict[str, int] = field(default_factory=dict)
    diagnostics: dict[str, int] = field(default_factory=dict)


def replay_events(store: SeriesStore, events) -> IngestSummary:
    n = store.ingest_many(events)
    return IngestSummary(
        events=n,
        articles=len(store.articles),
        counts=dict(store.counts),
        diagnostics=dict(store.diagnostics),
    )
