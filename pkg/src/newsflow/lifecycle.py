"""Article life-cycle analysis: seasonality, shelf-life, visit-profile classes.

Site traffic has strong day-night and weekday-weekend cycles; comparing
articles published at different times therefore uses hours-equivalent, clock
time rescaled by hour-of-week weights so that one unit always represents the
same expected sitewide attention.  On top of that this module computes the
effective shelf-life (time to accumulate a fraction of the horizon total) and
assigns each article one of five canonical visit-profile classes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import ClassifierConfig
from .ingest import ArticleSeries
from .timeutil import EPOCH_WEEKDAY_HOURS, HOURS_PER_WEEK, hour_of_week


@dataclass(frozen=True)
class SeasonalityProfile:
    """Hour-of-week traffic weights, mean exactly 1."""

    weights: tuple[float, ...]
    imputed_hours: tuple[int, ...] = ()
    source: str = ""

    def __post_init__(self) -> None:
        if len(self.weights) != HOURS_PER_WEEK:
            raise ValueError(f"need {HOURS_PER_WEEK} weights, got {len(self.weights)}")
        if min(self.weights) <= 0:
            raise ValueError("seasonality weights must be positive")
        mean = sum(self.weights) / HOURS_PER_WEEK
        if abs(mean - 1.0) > 1e-9:
            raise ValueError(f"weights must average 1, got {mean}")

    def weight_at(self, ts: float) -> float:
        return self.weights[hour_of_week(ts)]


def flat_profile() -> SeasonalityProfile:
    return SeasonalityProfile(weights=(1.0,) * HOURS_PER_WEEK, source="flat")


def build_seasonality_profile(start_ts: int, hourly_totals) -> SeasonalityProfile:
    """Estimate hour-of-week weights from consecutive sitewide hourly totals.

    Observation i covers the hour starting at start_ts + i * 3600.  NaN
    entries mark missing hours.  Hour-of-week bins with no data get weight 1
    and are flagged in imputed_hours.
    """
    totals = np.asarray(hourly_totals, dtype=float)
    if totals.ndim != 1 or len(totals) < 2 * HOURS_PER_WEEK:
        raise ValueError(f"need at least {2 * HOURS_PER_WEEK} hourly observations")
    hours = np.array(
        [hour_of_week(start_ts + i * 3600) for i in range(len(totals))], dtype=np.int64
    )
    valid = ~np.isnan(totals)
    if not valid.any():
        raise ValueError("no valid hourly observations")
    grand_mean = totals[valid].mean()
    if grand_mean <= 0:
        raise ValueError("overall traffic is zero; weights undefined")
    weights = np.ones(HOURS_PER_WEEK)
    imputed = []
    for h in range(HOURS_PER_WEEK):
        mask = valid & (hours == h)
        if mask.any():
            weights[h] = totals[mask].mean() / grand_mean
        else:
            imputed.append(h)
    weights = np.maximum(weights, 1e-9)
    weights /= weights.mean()
    return SeasonalityProfile(
        weights=tuple(weights.tolist()),
        imputed_hours=tuple(imputed),
        source=f"hourly totals n={len(totals)}",
    )


def to_hours_equivalent(
    duration_seconds: float, publication_ts: float, profile: SeasonalityProfile
) -> float:
    """Integral of the seasonality weight over the interval, in hours.

    Piecewise-constant per clock hour; exact segment arithmetic.  A flat
    profile makes this the identity (seconds / 3600).
    """
    if duration_seconds < 0:
        raise ValueError("duration must be non-negative")
    total = 0.0
    t = float(publication_ts)
    end = t + duration_seconds
    while t < end:
        boundary = (math.floor(t / 3600.0) + 1) * 3600.0
        segment_end = min(boundary, end)
        total += profile.weight_at(t) * (segment_end - t) / 3600.0
        t = segment_end
    return total


def minute_weights(profile: SeasonalityProfile, origin_ts: int, n_minutes: int) -> np.ndarray:
    """Seasonality weight of each whole minute starting at origin_ts.

    origin_ts must be minute-aligned; whole minutes never straddle an hour
    boundary, so per-minute weights are exact.
    """
    if origin_ts % 60 != 0:
        raise ValueError("origin_ts must be aligned to a minute boundary")
    starts = origin_ts + 60 * np.arange(n_minutes, dtype=np.int64)
    hour_idx = (starts // 3600 + EPOCH_WEEKDAY_HOURS) % HOURS_PER_WEEK
    table = np.asarray(profile.weights)
    return table[hour_idx]


def cumulative_hours_equivalent(
    profile: SeasonalityProfile, origin_ts: int, n_minutes: int
) -> np.ndarray:
    """Hours-equivalent elapsed at the start of each minute index; length n+1."""
    weights = minute_weights(profile, origin_ts, n_minutes)
    out = np.empty(n_minutes + 1)
    out[0] = 0.0
    np.cumsum(weights / 60.0, out=out[1:])
    return out


# ----- shelf-life -----


@dataclass(frozen=True)
class ShelfLife:
    article_id: str
    ell: float
    tau_minutes: int
    total_visits_at_horizon: int
    horizon_minutes: int


def shelf_life(
    series: ArticleSeries,
    ell: float = 0.90,
    horizon_minutes: int = 10080,
    truncated_ok: bool = False,
) -> ShelfLife:
    """Minutes from first visit until the article has ell of its horizon total.

    tau is the smallest minute index whose cumulative visit count reaches
    ell times the cumulative count at the horizon.

    A grid shorter than the horizon usually means the article simply has not
    been observed that long yet, and tau against the partial total would be
    silently understated; that case raises unless truncated_ok says the
    caller has checked coverage (trailing visit-free minutes are exact).
    """
    if not 0.0 < ell < 1.0:
        raise ValueError("ell must be in (0, 1)")
    if series.origin_minute is None:
        raise ValueError("article has no visits; shelf-life undefined")
    if not truncated_ok and series.n_minutes < horizon_minutes:
        raise ValueError(
            f"series covers {series.n_minutes} of {horizon_minutes} minutes; "
            "pass truncated_ok if observation extends through the horizon"
        )
    visits = series.visit_series(min(series.n_minutes, horizon_minutes))
    total = int(visits.sum())
    if total == 0:
        raise ValueError("zero visits inside the horizon; shelf-life undefined")
    cumulative = np.cumsum(visits)
    tau = int(np.searchsorted(cumulative, ell * total, side="left"))
    return ShelfLife(
        article_id=series.article_id,
        ell=ell,
        tau_minutes=tau,
        total_visits_at_horizon=total,
        horizon_minutes=horizon_minutes,
    )


# ----- profile classification -----


PROFILE_CLASSES = (
    "decreasing",
    "delayed_decreasing",
    "steady",
    "increasing",
    "rebounding",
)


@dataclass(frozen=True)
class ProfileResult:
    label: str
    diagnostics: dict = field(default_factory=dict, compare=False)


def _centered_moving_average(values: np.ndarray, window: int) -> np.ndarray:
    n = len(values)
    if window <= 1 or n == 0:
        return values.astype(float)
    half = window // 2
    cum = np.concatenate(([0.0], np.cumsum(values, dtype=float)))
    idx = np.arange(n)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + (window - half), n)
    return (cum[hi] - cum[lo]) / (hi - lo)


def _theil_sen_drift(x_hours: np.ndarray, y: np.ndarray, max_points: int = 361) -> float:
    """Median pairwise slope (per hour-equivalent), on a subsampled grid."""
    n = len(y)
    if n > max_points:
        idx = np.unique(np.linspace(0, n - 1, max_points).round().astype(int))
        x_hours = x_hours[idx]
        y = y[idx]
        n = len(y)
    dy = np.subtract.outer(y, y)
    dx = np.subtract.outer(x_hours, x_hours)
    upper = np.triu_indices(n, k=1)
    return float(np.median(dy[upper] / dx[upper]))


def _log_backcast_ratio(x_hours: np.ndarray, smoothed: np.ndarray, peak: float) -> float:
    """Fit log(rate) on the window's second half, extrapolate to time zero.

    A flat plateau followed by decay back-extrapolates above the observed
    peak; a single exponential back-extrapolates to roughly the peak itself.
    """
    half = len(smoothed) // 2
    xs = x_hours[half:]
    ys = smoothed[half:]
    mask = ys > 0
    if mask.sum() < 10:
        return 1.0
    coeffs = np.polyfit(xs[mask], np.log(ys[mask]), 1)
    predicted_at_zero = math.exp(coeffs[1])
    return predicted_at_zero / peak if peak > 0 else 1.0


def classify_profile(
    series: ArticleSeries,
    profile: SeasonalityProfile | None = None,
    config: ClassifierConfig | None = None,
) -> ProfileResult:
    """Label the first 12 hours-equivalent of an article's visit curve.

    Rule order on the smoothed per-minute rate: a deep dip followed by a
    recovery of at least 30% of peak is rebounding; a near-zero overall
    Theil-Sen drift is steady; a clearly positive drift is increasing; a
    downward drift is delayed_decreasing when the curve holds an early
    plateau near the peak AND the tail's log-linear back-extrapolation
    overshoots the peak (distinguishing a true plateau from slow decay),
    otherwise plain decreasing.
    """
    profile = profile or flat_profile()
    config = config or ClassifierConfig()
    if series.origin_minute is None:
        raise ValueError("article has no visits")
    origin_ts = series.origin_minute * 60
    n = series.n_minutes
    heq = cumulative_hours_equivalent(profile, origin_ts, n)
    if heq[-1] < config.window_hours_equiv:
        raise ValueError(
            f"series covers {heq[-1]:.2f} h-equiv, "
            f"needs {config.window_hours_equiv}"
        )
    m_end = int(np.searchsorted(heq, config.window_hours_equiv, side="left"))
    m_end = max(min(m_end, n), 1)

    visits = series.visit_series(m_end).astype(float)
    nonempty = int((visits > 0).sum())
    if nonempty < config.min_nonempty_minutes:
        raise ValueError(
            f"only {nonempty} non-empty minutes in the window; "
            f"need {config.min_nonempty_minutes}"
        )

    smoothed = _centered_moving_average(visits, config.smooth_minutes)
    x_hours = heq[:m_end]
    peak = float(smoothed.max())
    peak_idx = int(smoothed.argmax())

    diagnostics: dict = {
        "window_minutes": m_end,
        "nonempty_minutes": nonempty,
        "peak_rate": peak,
        "peak_minute": peak_idx,
    }

    # Rebound: a post-peak trough at or below trough_frac of peak, later
    # followed by a rate at least recovery_frac of peak above that trough.
    # Judged on a heavier smoothing so shot noise on low-rate articles
    # cannot fake the dip-and-recover pattern.
    rebound_smoothed = _centered_moving_average(visits, config.rebound_smooth_minutes)
    rebound_peak = float(rebound_smoothed.max())
    rebound_peak_idx = int(rebound_smoothed.argmax())
    tail = rebound_smoothed[rebound_peak_idx:]
    if len(tail) > 1 and rebound_peak > 0:
        running_min = np.minimum.accumulate(tail)
        prior_min = np.concatenate(([np.inf], running_min[:-1]))
        candidates = (prior_min <= config.rebound_trough_frac * rebound_peak) & (
            tail - prior_min >= config.rebound_recovery_frac * rebound_peak
        )
        if candidates.any():
            t = int(np.argmax(candidates))
            diagnostics["trough_rate"] = float(prior_min[t])
            diagnostics["recovery_rate"] = float(tail[t])
            diagnostics["recovery_minute"] = rebound_peak_idx + t
            return ProfileResult("rebounding", diagnostics)

    slope = _theil_sen_drift(x_hours, smoothed)
    drift = slope * config.window_hours_equiv
    diagnostics["theil_sen_slope_per_heq"] = slope
    diagnostics["window_drift"] = drift

    threshold = config.steady_slope_frac * peak
    if abs(drift) < threshold:
        return ProfileResult("steady", diagnostics)
    if drift > 0:
        return ProfileResult("increasing", diagnostics)

    plateau_level = (1.0 - config.plateau_frac) * peak
    below = np.nonzero(smoothed < plateau_level)[0]
    plateau_run = int(below[0]) if len(below) else m_end
    backcast = _log_backcast_ratio(x_hours, smoothed, peak)
    diagnostics["plateau_run_minutes"] = plateau_run
    diagnostics["backcast_ratio"] = backcast
    if plateau_run >= config.plateau_minutes and backcast >= config.delayed_excess_ratio:
        return ProfileResult("delayed_decreasing", diagnostics)
    return ProfileResult("decreasing", diagnostics)
