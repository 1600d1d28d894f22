"""Event model and the line-delimited wire format.

One JSON object per line.  Three kinds of record:

    {"kind": "visit", "article_id": "a1", "timestamp": "2024-01-01T12:00:00Z",
     "referral_url": "http://elsewhere.example/x", "section": "news"}
    {"kind": "tweet", "article_id": "a1", "timestamp": "...",
     "tweet_text": "...", "author_followers": 120, "author_friends": 80,
     "author_statuses": 4100}
    {"kind": "facebook_snapshot", "article_id": "a1", "timestamp": "...",
     "share_count": 17}

`referral_url` may be empty (a direct visit).  `section` is optional; it labels
the article the first time it appears.  Timestamps are ISO-8601, UTC assumed
when no offset is given.  Internally timestamps are epoch seconds.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Union

from .timeutil import format_iso8601, parse_iso8601


class EventFormatError(ValueError):
    """Raised for a line that does not parse into a valid event."""


class ReferralClass(enum.Enum):
    """Origin bucket of a page view."""

    INTERNAL = 0   # a page on our own site
    EXTERNAL = 1   # any other site, social networks included
    DIRECT = 2     # empty referral: e-mail, IM, apps, typed URLs
    SEARCH = 3     # organic search results


@dataclass(frozen=True)
class VisitEvent:
    article_id: str
    ts: int
    referral_url: str = ""
    section: str = ""

    def __post_init__(self) -> None:
        if not self.article_id:
            raise EventFormatError("visit with empty article_id")


@dataclass(frozen=True)
class ReactionEvent:
    article_id: str
    ts: int
    kind: str
    tweet_text: str = ""
    author_followers: int = 0
    author_friends: int = 0
    author_statuses: int = 0
    share_count: int = 0

    def __post_init__(self) -> None:
        if not self.article_id:
            raise EventFormatError("reaction with empty article_id")
        if self.kind == "tweet":
            if min(self.author_followers, self.author_friends, self.author_statuses) < 0:
                raise EventFormatError("negative author counter")
        elif self.kind == "facebook_snapshot":
            if self.share_count < 0:
                raise EventFormatError("negative share_count")
        else:
            raise EventFormatError(f"unknown reaction kind: {self.kind!r}")


Event = Union[VisitEvent, ReactionEvent]

_VISIT_KEYS = {"kind", "article_id", "timestamp", "referral_url", "section"}
_TWEET_KEYS = {
    "kind",
    "article_id",
    "timestamp",
    "tweet_text",
    "author_followers",
    "author_friends",
    "author_statuses",
}
_FB_KEYS = {"kind", "article_id", "timestamp", "share_count"}


def parse_event_line(line: str) -> Event:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise EventFormatError(f"bad JSON: {exc}") from None
    if not isinstance(record, dict):
        raise EventFormatError("event line is not an object")
    kind = record.get("kind")
    try:
        ts = parse_iso8601(record["timestamp"])
        article_id = record["article_id"]
        if kind == "visit":
            extra = record.keys() - _VISIT_KEYS
            if extra:
                raise EventFormatError(f"unexpected visit fields: {sorted(extra)}")
            return VisitEvent(
                article_id=article_id,
                ts=ts,
                referral_url=record.get("referral_url", ""),
                section=record.get("section", ""),
            )
        if kind == "tweet":
            extra = record.keys() - _TWEET_KEYS
            if extra:
                raise EventFormatError(f"unexpected tweet fields: {sorted(extra)}")
            return ReactionEvent(
                article_id=article_id,
                ts=ts,
                kind="tweet",
                tweet_text=record.get("tweet_text", ""),
                author_followers=int(record.get("author_followers", 0)),
                author_friends=int(record.get("author_friends", 0)),
                author_statuses=int(record.get("author_statuses", 0)),
            )
        if kind == "facebook_snapshot":
            extra = record.keys() - _FB_KEYS
            if extra:
                raise EventFormatError(f"unexpected snapshot fields: {sorted(extra)}")
            return ReactionEvent(
                article_id=article_id,
                ts=ts,
                kind="facebook_snapshot",
                share_count=int(record["share_count"]),
            )
    except KeyError as exc:
        raise EventFormatError(f"missing field {exc}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, EventFormatError):
            raise
        raise EventFormatError(str(exc)) from None
    raise EventFormatError(f"unknown event kind: {kind!r}")


def format_event_line(event: Event) -> str:
    record: dict[str, object]
    if isinstance(event, VisitEvent):
        record = {
            "kind": "visit",
            "article_id": event.article_id,
            "timestamp": format_iso8601(event.ts),
            "referral_url": event.referral_url,
        }
        if event.section:
            record["section"] = event.section
    elif isinstance(event, ReactionEvent):
        if event.kind == "tweet":
            record = {
                "kind": "tweet",
                "article_id": event.article_id,
                "timestamp": format_iso8601(event.ts),
                "tweet_text": event.tweet_text,
                "author_followers": event.author_followers,
                "author_friends": event.author_friends,
                "author_statuses": event.author_statuses,
            }
        else:
            record = {
                "kind": "facebook_snapshot",
                "article_id": event.article_id,
                "timestamp": format_iso8601(event.ts),
                "share_count": event.share_count,
            }
    else:
        raise TypeError(f"not an event: {event!r}")
    return json.dumps(record, separators=(",", ":"), sort_keys=True)


def read_events(fh, on_error: str = "raise"):
    """Yield events from a line file; on_error is 'raise' or 'skip'."""
    for lineno, line in enumerate(fh, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            yield parse_event_line(line)
        except EventFormatError:
            if on_error == "raise":
                raise
            elif on_error != "skip":
                raise ValueError(f"bad on_error mode: {on_error!r}") from None


def write_events(fh, events) -> int:
    n = 0
    for event in events:
        fh.write(format_event_line(event))
        fh.write("\n")
        n += 1
    return n
