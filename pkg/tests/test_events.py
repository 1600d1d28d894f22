"""Wire format round trips and rejection of malformed lines."""

import io
import json

import pytest
from hypothesis import given, strategies as st

from newsflow.events import (
    EventFormatError,
    ReactionEvent,
    VisitEvent,
    format_event_line,
    parse_event_line,
    read_events,
    write_events,
)
from newsflow.timeutil import format_iso8601, parse_iso8601


def test_visit_round_trip():
    event = VisitEvent(
        article_id="a17",
        ts=1704103260,
        referral_url="http://elsewhere.example/story",
        section="news",
    )
    assert parse_event_line(format_event_line(event)) == event


def test_tweet_round_trip():
    event = ReactionEvent(
        article_id="a2",
        ts=1704103317,
        kind="tweet",
        tweet_text="RT @someone: big story http://t.co/x",
        author_followers=1200,
        author_friends=300,
        author_statuses=9000,
    )
    assert parse_event_line(format_event_line(event)) == event


def test_snapshot_round_trip():
    event = ReactionEvent(
        article_id="a9", ts=1704104000, kind="facebook_snapshot", share_count=41
    )
    assert parse_event_line(format_event_line(event)) == event


ids = st.text(
    alphabet=st.characters(whitelist_categories=("Ll", "Nd")), min_size=1, max_size=12
)


@given(
    article_id=ids,
    ts=st.integers(min_value=0, max_value=4_000_000_000),
    referral=st.sampled_from(
        ["", "http://site.example/news/a1", "https://u:p@x.example:8080/p?q=1"]
    ),
    section=st.sampled_from(["", "news", "indepth"]),
)
def test_visit_round_trip_property(article_id, ts, referral, section):
    event = VisitEvent(article_id, ts, referral, section)
    assert parse_event_line(format_event_line(event)) == event


def test_section_omitted_from_line_when_empty():
    line = format_event_line(VisitEvent("a1", 1704067200))
    assert "section" not in json.loads(line)


def test_formatted_lines_are_byte_stable():
    event = VisitEvent("a1", 1704067200, "http://x.example/", "news")
    assert format_event_line(event) == format_event_line(event)
    # Keys are sorted, separators compact: re-serializing the parsed dict
    # the same way must be idempotent.
    line = format_event_line(event)
    assert json.dumps(json.loads(line), separators=(",", ":"), sort_keys=True) == line


def test_timestamp_forms_agree():
    # Z suffix, explicit offset, and naive all mean the same instant here.
    assert parse_iso8601("2024-01-01T12:00:00Z") == 1704110400
    assert parse_iso8601("2024-01-01T13:00:00+01:00") == 1704110400
    assert parse_iso8601("2024-01-01T12:00:00") == 1704110400
    assert format_iso8601(1704110400) == "2024-01-01T12:00:00Z"


@pytest.mark.parametrize(
    "line",
    [
        "not json",
        '["list"]',
        '{"kind": "visit", "article_id": "a1"}',  # no timestamp
        '{"kind": "visit", "timestamp": "2024-01-01T00:00:00Z"}',  # no id
        '{"kind": "pageview", "article_id": "a1", "timestamp": "2024-01-01T00:00:00Z"}',
        '{"article_id": "a1", "timestamp": "2024-01-01T00:00:00Z"}',  # no kind
        '{"kind": "visit", "article_id": "", "timestamp": "2024-01-01T00:00:00Z"}',
        '{"kind": "visit", "article_id": "a1", "timestamp": "yesterday"}',
        '{"kind": "tweet", "article_id": "a1", "timestamp": "2024-01-01T00:00:00Z",'
        ' "author_followers": -3}',
        '{"kind": "facebook_snapshot", "article_id": "a1",'
        ' "timestamp": "2024-01-01T00:00:00Z", "share_count": -1}',
        '{"kind": "facebook_snapshot", "article_id": "a1",'
        ' "timestamp": "2024-01-01T00:00:00Z"}',  # share_count required
        '{"kind": "visit", "article_id": "a1", "timestamp": "2024-01-01T00:00:00Z",'
        ' "color": "red"}',  # unknown field
        '{"kind": "tweet", "article_id": "a1", "timestamp": "2024-01-01T00:00:00Z",'
        ' "share_count": 3}',  # field from the wrong kind
    ],
)
def test_malformed_lines_raise(line):
    with pytest.raises(EventFormatError):
        parse_event_line(line)


def test_unknown_reaction_kind_rejected_at_construction():
    with pytest.raises(EventFormatError):
        ReactionEvent("a1", 0, kind="like")


def test_read_events_skip_mode_drops_bad_lines():
    good = format_event_line(VisitEvent("a1", 1704067200))
    fh = io.StringIO("\n".join([good, "garbage", "", good]) + "\n")
    events = list(read_events(fh, on_error="skip"))
    assert len(events) == 2
    with pytest.raises(EventFormatError):
        list(read_events(io.StringIO("garbage\n")))
    with pytest.raises(ValueError):
        list(read_events(io.StringIO("garbage\n"), on_error="ignore"))


def test_write_events_round_trip(tmp_path):
    events = [
        VisitEvent("a1", 1704067200, "", "news"),
        ReactionEvent("a1", 1704067230, "tweet", tweet_text="hello"),
        ReactionEvent("a1", 1704067500, "facebook_snapshot", share_count=2),
    ]
    path = tmp_path / "events.log"
    with path.open("w") as fh:
        assert write_events(fh, events) == 3
    with path.open() as fh:
        assert list(read_events(fh)) == events
