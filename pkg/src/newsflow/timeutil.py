"""Time helpers: ISO-8601 parsing, epoch arithmetic, hour-of-week."""

from __future__ import annotations

from datetime import datetime, timezone

SECONDS_PER_MINUTE = 60
MINUTES_PER_HOUR = 60
MINUTES_PER_DAY = 1440
MINUTES_PER_WEEK = 10080
HOURS_PER_WEEK = 168

# 1970-01-01 was a Thursday; shift so hour-of-week 0 is Monday 00:00 UTC.
EPOCH_WEEKDAY_HOURS = 3 * 24


def parse_iso8601(text: str) -> int:
    """Parse an ISO-8601 timestamp into epoch seconds (UTC assumed if naive)."""
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def format_iso8601(ts: int) -> str:
    """Format epoch seconds as an ISO-8601 UTC string with Z suffix."""
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def epoch_minute(ts: int) -> int:
    return ts // SECONDS_PER_MINUTE


def hour_of_week(ts: float) -> int:
    """Hour-of-week index in [0, 168), Monday 00:00 UTC = 0."""
    return int((ts // 3600 + EPOCH_WEEKDAY_HOURS) % HOURS_PER_WEEK)
