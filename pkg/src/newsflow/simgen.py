"""Calibrated synthetic corpus generator.

Produces event streams whose aggregate statistics land on the published
reference values the engine is validated against: lognormal 7-day totals
with mean about 5,971 visits, a 70/14/11/5 referral split, class-specific
social coupling (Facebook:tweet 1.6:1 for News vs 2.7:1 for In-Depth, unique
tweet fractions 17% vs 25%, corporate retweet fractions 27% vs 44%), News
half-lives around 8 hours vs 20 for In-Depth, and the 80:10:10 split of
News visit profiles.

Two deliberate couplings are planted so the downstream modeling has real
signal to find:

* richer tweet vocabularies for higher-interest articles, so early tweet
  entropy predicts the eventual total by construction;
* a front-loaded "early burst" multiplier on decay-shaped articles,
  independent of the total, which makes early visit counts alone a noisy
  predictor and gives the social features their head start.

Generation is pure and seed-driven: per-article substreams are derived from
(root seed, article index), so corpora are reproducible event for event.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .events import Event, ReactionEvent, VisitEvent

HORIZON_MINUTES = 10080
BURST_DECAY_HOURS = 4.0

PROFILE_ORDER = ("decreasing", "delayed_decreasing", "steady", "increasing", "rebounding")

_REFERRAL_SPLIT = (0.70, 0.14, 0.11, 0.05)  # internal, external, direct, search

_EXTERNAL_HOSTS = (
    "social.example",
    "partner0.example",
    "partner1.example",
    "partner2.example",
    "aggregator.example",
)

_LETTERS = np.array(list("abcdefghijklmnopqrstuvwxyz"))


@dataclass(frozen=True)
class SocialCoupling:
    """Per-section social reaction parameters."""

    fb_per_tweet: float
    unique_fraction: float
    corporate_fraction: float
    tweets_per_visit: float
    tweets_per_visit_sigma: float = 0.25

    def __post_init__(self) -> None:
        for name in ("unique_fraction", "corporate_fraction"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0,1], got {value}")
        if min(self.fb_per_tweet, self.tweets_per_visit) < 0:
            raise ValueError("rates must be non-negative")


@dataclass(frozen=True)
class CorpusSpec:
    n_articles: int = 606
    section_mix: tuple[float, float] = (322 / 461, 139 / 461)  # news, indepth
    # News profile classes: decreasing, delayed_decreasing, steady,
    # increasing, rebounding.  The two decreasing flavors together carry the
    # "80" of the 80:10:10 rule.
    profile_mix: tuple[float, ...] = (0.78, 0.02, 0.075, 0.025, 0.10)
    visit_total_mean: float = 5971.0
    visit_total_sigma: float = 0.75
    news: SocialCoupling = field(
        default_factory=lambda: SocialCoupling(
            fb_per_tweet=1.6,
            unique_fraction=0.17,
            corporate_fraction=0.275,
            tweets_per_visit=0.018177,
        )
    )
    indepth: SocialCoupling = field(
        default_factory=lambda: SocialCoupling(
            fb_per_tweet=2.7,
            unique_fraction=0.25,
            corporate_fraction=0.445,
            tweets_per_visit=0.028072,
        )
    )
    burst_sigma: float = 2.2
    # Reach coupling: stories that end up big are tweeted by bigger accounts.
    follower_slope: float = 0.5
    corporate_handles: tuple[str, ...] = ("AJEnglish", "AJELive")
    start_ts: int = 1704067200  # 2024-01-01 00:00 UTC, a Monday
    publication_days: float = 7.0
    collection_days: float | None = None  # truncate emission at start + this
    seed: int = 20240101

    def __post_init__(self) -> None:
        if self.n_articles < 1:
            raise ValueError("need at least one article")
        if min(self.section_mix) < 0 or min(self.profile_mix) < 0:
            raise ValueError("mix entries must be non-negative")
        if len(self.profile_mix) != len(PROFILE_ORDER):
            raise ValueError(f"profile_mix needs {len(PROFILE_ORDER)} entries")
        object.__setattr__(
            self, "section_mix", _normalized(self.section_mix)
        )
        object.__setattr__(
            self, "profile_mix", _normalized(self.profile_mix)
        )


def _normalized(mix) -> tuple[float, ...]:
    total = float(sum(mix))
    if total <= 0:
        raise ValueError("mix must have positive mass")
    return tuple(float(m) / total for m in mix)


@dataclass(frozen=True)
class Blueprint:
    """Everything needed to emit one article's event streams."""

    article_id: str
    section: str                  # "news" | "indepth"
    profile_class: str
    publication_ts: int
    total_visits: float
    kernel: dict[str, float]
    burst_log: float              # ln of the early-burst multiplier, >= 0
    tweets_per_visit: float
    fb_per_tweet: float
    unique_fraction: float
    corporate_fraction: float
    vocab_size: int
    seed: tuple[int, int]
    follower_log_location: float = math.log(200.0)


def _draw_kernel(profile_class: str, section: str, rng: np.random.Generator) -> dict[str, float]:
    if section == "indepth":
        half_life = float(np.clip(20.0 * math.exp(rng.normal(0.0, 0.30)), 12.0, 32.0))
        return {"shape": 0.0, "half_life_hours": half_life}
    if profile_class == "decreasing":
        half_life = float(np.clip(8.0 * math.exp(rng.normal(0.0, 0.35)), 4.0, 14.0))
        return {"shape": 0.0, "half_life_hours": half_life}
    if profile_class == "delayed_decreasing":
        return {
            "shape": 1.0,
            "plateau_hours": float(rng.uniform(2.5, 4.0)),
            "half_life_hours": float(rng.uniform(5.0, 7.0)),
        }
    if profile_class == "steady":
        return {
            "shape": 2.0,
            "level_hours": float(rng.uniform(12.0, 36.0)),
            "half_life_hours": float(rng.uniform(6.0, 10.0)),
        }
    if profile_class == "increasing":
        return {
            "shape": 3.0,
            "ramp_hours": float(rng.uniform(14.0, 20.0)),
            "half_life_hours": float(rng.uniform(8.0, 12.0)),
        }
    if profile_class == "rebounding":
        half_life = float(rng.uniform(1.5, 2.2))
        width = float(rng.uniform(0.7, 1.0))
        # Size the pulse by its height under two hours of box smoothing: tall
        # enough that the recovery clears the rebound threshold, yet clearly
        # below the opening peak so the article still peaks at publication.
        # A centered average at the opening covers only the first hour, so
        # that is the peak the thresholds scale against.
        open_peak = (half_life / math.log(2)) * (1.0 - 2.0 ** (-1.0 / half_life))
        spread = (
            math.sqrt(2.0 * math.pi)
            * width
            / 2.0
            * math.erf(1.0 / (width * math.sqrt(2.0)))
        )
        pulse_height = float(rng.uniform(0.50, min(0.66, open_peak - 0.15)))
        # The pulse may only start once the opening decay has bottomed out,
        # with an extra hour-scale margin so smoothing cannot bridge the
        # trough.
        center_lo = max(5.5, 2.8 * half_life + 2.0 * width + 1.2)
        return {
            "shape": 4.0,
            "half_life_hours": half_life,
            "pulse_center_hours": float(rng.uniform(center_lo, 10.2)),
            "pulse_width_hours": width,
            "pulse_amplitude": pulse_height / spread,
        }
    raise ValueError(f"unknown profile class: {profile_class!r}")


def kernel_rates(
    blueprint: Blueprint,
    n_minutes: int = HORIZON_MINUTES,
    include_burst: bool = True,
) -> np.ndarray:
    """Expected visits per minute; sums exactly to the blueprint total.

    With include_burst=False the front-loaded referral burst is left out and
    the curve is just the class kernel.  Social activity is sampled from that
    version: a front-page spike brings extra readers but the people tweeting
    the story track its underlying news value, not the referral spike.
    """
    hours = np.arange(n_minutes) / 60.0
    k = blueprint.kernel
    half_life = k.get("half_life_hours", 8.0)
    cls = blueprint.profile_class
    if cls == "decreasing":
        shape = np.power(2.0, -hours / half_life)
    elif cls == "delayed_decreasing":
        plateau = k["plateau_hours"]
        shape = np.where(
            hours < plateau, 1.0, np.power(2.0, -(hours - plateau) / half_life)
        )
    elif cls == "steady":
        level = k["level_hours"]
        shape = np.where(
            hours < level, 1.0, np.power(2.0, -(hours - level) / half_life)
        )
    elif cls == "increasing":
        ramp = k["ramp_hours"]
        shape = np.where(
            hours < ramp, hours / ramp, np.power(2.0, -(hours - ramp) / half_life)
        )
    elif cls == "rebounding":
        center = k["pulse_center_hours"]
        width = k["pulse_width_hours"]
        shape = np.power(2.0, -hours / half_life) + k["pulse_amplitude"] * np.exp(
            -((hours - center) ** 2) / (2.0 * width**2)
        )
    else:
        raise ValueError(f"unknown profile class: {cls!r}")
    if include_burst and blueprint.burst_log > 0.0:
        shape = shape * np.exp(blueprint.burst_log * np.exp(-hours / BURST_DECAY_HOURS))
    total_shape = shape.sum()
    if total_shape <= 0:
        return np.zeros(n_minutes)
    return shape * (blueprint.total_visits / total_shape)


def _vocab_size(total_visits: float) -> int:
    log2_k = 0.386 + 0.62 * math.log(max(total_visits, 1.0))
    return int(np.clip(round(2.0**log2_k), 12, 192))


def sample_article(
    spec: CorpusSpec,
    rng: np.random.Generator,
    article_id: str = "a0000",
    publication_ts: int | None = None,
    index: int = 0,
    section: str | None = None,
    profile_class: str | None = None,
) -> Blueprint:
    """Draw one article blueprint: section, class, total, kernel, coupling."""
    if section is None:
        section = "news" if rng.random() < spec.section_mix[0] else "indepth"
    if profile_class is None:
        if section == "news":
            profile_class = PROFILE_ORDER[
                int(rng.choice(len(PROFILE_ORDER), p=spec.profile_mix))
            ]
        else:
            profile_class = "decreasing"
    mu = math.log(spec.visit_total_mean) - spec.visit_total_sigma**2 / 2.0
    total = float(rng.lognormal(mean=mu, sigma=spec.visit_total_sigma))
    kernel = _draw_kernel(profile_class, section, rng)
    decay_family = profile_class in ("decreasing", "delayed_decreasing")
    burst_log = abs(float(rng.normal(0.0, spec.burst_sigma))) if decay_family else 0.0
    coupling = spec.news if section == "news" else spec.indepth
    tpv_sigma = coupling.tweets_per_visit_sigma
    tpv = coupling.tweets_per_visit * float(
        rng.lognormal(mean=-(tpv_sigma**2) / 2.0, sigma=tpv_sigma)
    )
    if publication_ts is None:
        publication_ts = spec.start_ts
    follower_loc = math.log(200.0) + spec.follower_slope * (math.log(total) - mu)
    return Blueprint(
        article_id=article_id,
        section=section,
        profile_class=profile_class,
        publication_ts=publication_ts,
        total_visits=total,
        kernel=kernel,
        burst_log=burst_log,
        tweets_per_visit=tpv,
        fb_per_tweet=coupling.fb_per_tweet,
        unique_fraction=coupling.unique_fraction,
        corporate_fraction=coupling.corporate_fraction,
        vocab_size=_vocab_size(total),
        seed=(spec.seed, index),
        follower_log_location=follower_loc,
    )


def _stratified_counts(n: int, mix) -> list[int]:
    """Largest-remainder apportionment of n items over the mix."""
    raw = [n * m for m in mix]
    counts = [int(x) for x in raw]
    short = n - sum(counts)
    remainders = sorted(
        range(len(mix)), key=lambda i: (raw[i] - counts[i], -i), reverse=True
    )
    for i in remainders[:short]:
        counts[i] += 1
    return counts


def generate_corpus(spec: CorpusSpec) -> list[Blueprint]:
    """All blueprints for the spec, publication-time ordered.

    Sections and News profile classes are assigned by stratified
    apportionment (realized mixes match the spec up to integer rounding);
    everything else is drawn from per-article substreams.
    """
    root = np.random.default_rng(np.random.SeedSequence([spec.seed, 0]))
    n = spec.n_articles
    pub_window_minutes = max(int(spec.publication_days * 1440), 1)
    pub_minutes = np.sort(root.integers(0, pub_window_minutes, size=n))

    n_news, n_indepth = _stratified_counts(n, spec.section_mix)
    sections = ["news"] * n_news + ["indepth"] * n_indepth
    root.shuffle(sections)
    class_counts = _stratified_counts(n_news, spec.profile_mix)
    news_classes = [
        PROFILE_ORDER[ci] for ci, count in enumerate(class_counts) for _ in range(count)
    ]
    root.shuffle(news_classes)

    blueprints = []
    news_cursor = 0
    width = max(4, len(str(n - 1)))
    for i in range(n):
        section = sections[i]
        if section == "news":
            profile_class = news_classes[news_cursor]
            news_cursor += 1
        else:
            profile_class = "decreasing"
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 1, i]))
        blueprints.append(
            sample_article(
                spec,
                rng,
                article_id=f"a{i:0{width}d}",
                publication_ts=spec.start_ts + int(pub_minutes[i]) * 60,
                index=i,
                section=section,
                profile_class=profile_class,
            )
        )
    return blueprints


def _random_token(rng: np.random.Generator, index: int) -> str:
    length = int(rng.integers(3, 8))
    letters = "".join(rng.choice(_LETTERS, size=length))
    return f"{letters}{index}"


def _kind_rank(event: Event) -> int:
    if isinstance(event, VisitEvent):
        return 0
    return 1 if event.kind == "tweet" else 2


def event_sort_key(event: Event):
    return (event.ts, event.article_id, _kind_rank(event))


def emit_events(blueprint: Blueprint, rng: np.random.Generator | None = None):
    """Generate one article's visit/tweet/snapshot events, time sorted."""
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(list(blueprint.seed) + [2]))
    rates = kernel_rates(blueprint)
    pub = blueprint.publication_ts
    aid = blueprint.article_id
    section = blueprint.section

    # Visits: Poisson per minute, referral classes from the fixed split.
    visit_counts = rng.poisson(rates)
    visit_minutes = np.repeat(np.arange(len(rates)), visit_counts)
    n_visits = len(visit_minutes)
    visit_seconds = rng.integers(0, 60, size=n_visits)
    order = np.lexsort((visit_seconds, visit_minutes))
    visit_minutes = visit_minutes[order]
    visit_seconds = visit_seconds[order]
    referral_draw = rng.random(n_visits)
    cuts = np.cumsum(_REFERRAL_SPLIT)
    referral_kind = np.searchsorted(cuts, referral_draw, side="right")
    external_host_idx = rng.integers(0, len(_EXTERNAL_HOSTS), size=n_visits)

    # Tweets: Poisson per minute, following the un-bursted kernel shape.
    social_rates = kernel_rates(blueprint, include_burst=False)
    tweet_counts = rng.poisson(social_rates * blueprint.tweets_per_visit)
    tweet_minutes = np.repeat(np.arange(len(rates)), tweet_counts)
    n_tweets = len(tweet_minutes)
    tweet_seconds = rng.integers(0, 60, size=n_tweets)
    tweet_order = np.lexsort((tweet_seconds, tweet_minutes))
    tweet_minutes = tweet_minutes[tweet_order]
    tweet_seconds = tweet_seconds[tweet_order]

    # Facebook: an independent Poisson share process, snapshotted on change.
    share_rate = social_rates * blueprint.tweets_per_visit * blueprint.fb_per_tweet
    share_cumulative = np.cumsum(rng.poisson(share_rate))

    pool = [_random_token(rng, i) for i in range(blueprint.vocab_size)]
    headline = " ".join(pool[: min(8, len(pool))])
    handles = ("AJEnglish", "AJELive")
    corporate_text = f"RT @{handles[int(rng.integers(0, len(handles)))]}: {headline}"
    fresh_prob = (
        blueprint.unique_fraction / (1.0 - blueprint.corporate_fraction)
        if blueprint.corporate_fraction < 1.0
        else 0.0
    )

    def visit_stream():
        for i in range(n_visits):
            ts = pub + int(visit_minutes[i]) * 60 + int(visit_seconds[i])
            kind = int(referral_kind[i])
            if kind == 0:
                url = f"http://site.example/{section}/{aid}"
            elif kind == 1:
                url = f"http://{_EXTERNAL_HOSTS[int(external_host_idx[i])]}/story/{aid}"
            elif kind == 2:
                url = ""
            else:
                url = f"http://search.example/results?q={aid}"
            yield VisitEvent(article_id=aid, ts=ts, referral_url=url, section=section)

    def tweet_stream():
        prior_fresh: list[str] = []
        for i in range(n_tweets):
            ts = pub + int(tweet_minutes[i]) * 60 + int(tweet_seconds[i])
            u = rng.random()
            if u < blueprint.corporate_fraction:
                text = corporate_text
            elif rng.random() < fresh_prob or not prior_fresh:
                n_tokens = 6 + int(rng.poisson(4.0))
                words = " ".join(
                    pool[int(j)] for j in rng.integers(0, len(pool), size=n_tokens)
                )
                if rng.random() < 0.3:
                    words = f"{words} http://sho.example/{int(rng.integers(0, 10**6))}"
                text = words
                prior_fresh.append(words)
            else:
                source = prior_fresh[int(rng.integers(0, len(prior_fresh)))]
                text = f"RT @user{int(rng.integers(0, 10**5))}: {source}"
            yield ReactionEvent(
                article_id=aid,
                ts=ts,
                kind="tweet",
                tweet_text=text,
                author_followers=int(rng.lognormal(blueprint.follower_log_location, 1.3)),
                author_friends=int(rng.lognormal(math.log(150.0), 1.1)),
                author_statuses=int(rng.lognormal(math.log(2000.0), 1.4)),
            )

    def snapshot_stream():
        last_emitted = None
        for poll_minute in range(5, HORIZON_MINUTES + 1, 5):
            count = int(share_cumulative[poll_minute - 1])
            if last_emitted is None or count != last_emitted:
                yield ReactionEvent(
                    article_id=aid,
                    ts=pub + poll_minute * 60,
                    kind="facebook_snapshot",
                    share_count=count,
                )
                last_emitted = count

    return heapq.merge(
        visit_stream(), tweet_stream(), snapshot_stream(), key=event_sort_key
    )


def corpus_event_stream(spec: CorpusSpec, blueprints: list[Blueprint] | None = None):
    """Globally time-sorted event stream for the whole corpus."""
    if blueprints is None:
        blueprints = generate_corpus(spec)
    streams = [emit_events(b) for b in blueprints]
    merged = heapq.merge(*streams, key=event_sort_key)
    if spec.collection_days is None:
        return merged
    cutoff = spec.start_ts + int(spec.collection_days * 86400)

    def truncated():
        for event in merged:
            if event.ts < cutoff:
                yield event

    return truncated()


def spec_with(spec: CorpusSpec, **changes) -> CorpusSpec:
    return replace(spec, **changes)


# ----- corpus summary statistics -----


def corpus_stats(series_list, config=None) -> dict:
    """Reference summary over ingested articles: the headline dataset numbers.

    Means are per article; fractions and the share:tweet ratio are computed
    over pooled counts.
    """
    from .config import EngineConfig

    config = config or EngineConfig()
    if not series_list:
        raise ValueError("corpus_stats needs at least one article")
    n = len(series_list)
    visits_7d = []
    visits_1h = []
    visits_1d = []
    shares_7d = []
    tweet_totals = []
    entropies = []
    unique_total = 0
    corporate_total = 0
    tweets_total = 0
    followers_means = []
    for series in series_list:
        visits_7d.append(series.total_visits(10080))
        visits_1h.append(series.total_visits(60))
        visits_1d.append(series.total_visits(1440))
        shares_7d.append(series.shares_at(10079))
        stats = series.tweet_stats(config)
        tweet_totals.append(stats["tweets"])
        entropies.append(stats["tweet_entropy"])
        unique_total += stats["unique_tweets"]
        corporate_total += stats["corporate_tweets"]
        tweets_total += stats["tweets"]
        followers_means.append(stats["mean_followers"])
    shares_total = int(sum(shares_7d))
    return {
        "articles": n,
        "mean_visits_7d": float(np.mean(visits_7d)),
        "mean_visits_1h": float(np.mean(visits_1h)),
        "mean_visits_1d": float(np.mean(visits_1d)),
        "mean_shares_7d": float(np.mean(shares_7d)),
        "mean_tweets_7d": float(np.mean(tweet_totals)),
        "mean_tweet_entropy": float(np.mean(entropies)),
        "mean_followers": float(np.mean(followers_means)),
        "total_tweets": int(tweets_total),
        "total_shares": shares_total,
        "fb_tweet_ratio": shares_total / tweets_total if tweets_total else 0.0,
        "unique_fraction": unique_total / tweets_total if tweets_total else 0.0,
        "corporate_fraction": corporate_total / tweets_total if tweets_total else 0.0,
    }
