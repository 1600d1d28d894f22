"""Social reaction processing: tweet text analysis and share-count repair.

Tweets arrive individually with author metadata; Facebook arrives as cumulative
share-count snapshots polled at irregular intervals.  This module holds the
pure text/number machinery: normalization, edit-distance uniqueness, corporate
retweet detection, vocabulary entropy, and the interpolation that turns sparse
cumulative snapshots into per-minute share increments.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from collections.abc import Iterable, Sequence

_WHITESPACE = re.compile(r"\s+")
_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")
_URL = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_RT_PREFIX = re.compile(r"^\s*rt\s+@\w+:?", re.IGNORECASE)


def normalize_tweet(text: str) -> str:
    """Drop URLs and one leading retweet marker, collapse whitespace, trim.

    "RT @AJEnglish: Story title http://sho.rt/x" becomes "Story title".
    Only the outermost retweet marker is removed; a nested "RT @a: RT @b: x"
    keeps the inner marker.  Case is preserved.
    """
    text = _URL.sub(" ", text)
    text = _RT_PREFIX.sub(" ", text, count=1)
    return _WHITESPACE.sub(" ", text).strip()


def tokenize(text: str) -> list[str]:
    """Lowercased alphanumeric tokens; everything else is a separator."""
    return [tok for tok in _TOKEN_SPLIT.split(text.lower()) if tok]


def levenshtein(a: str, b: str) -> int:
    """Exact edit distance (insert/delete/substitute, unit costs)."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost))
        previous = current
    return previous[-1]


def levenshtein_gt(a: str, b: str, k: int) -> bool:
    """True iff edit distance between a and b exceeds k.

    Cheaper than computing the full distance: the length gap is a lower
    bound, and the banded dynamic program bails out as soon as every entry
    in a row is above k.
    """
    if k < 0:
        return True
    if a == b:
        return False
    if abs(len(a) - len(b)) > k:
        return True
    if len(a) < len(b):
        a, b = b, a
    n = len(b)
    previous = list(range(n + 1))
    big = k + 1
    for i, ca in enumerate(a, start=1):
        lo = max(1, i - k)
        hi = min(n, i + k)
        current = [big] * (n + 1)
        if lo == 1:
            current[0] = i
        row_min = current[lo - 1]
        for j in range(lo, hi + 1):
            cost = 0 if ca == b[j - 1] else 1
            value = previous[j] + 1
            left = current[j - 1] + 1
            if left < value:
                value = left
            diag = previous[j - 1] + cost
            if diag < value:
                value = diag
            current[j] = value
            if value < row_min:
                row_min = value
        if row_min > k:
            return True
        previous = current
    return previous[n] > k


def corporate_retweet_pattern(handles: Sequence[str]) -> re.Pattern[str]:
    alternatives = "|".join(re.escape(h) for h in handles)
    return re.compile(rf"\brt\s+@(?:{alternatives})(?!\w)", re.IGNORECASE)


def is_corporate_retweet(text: str, handles: Sequence[str]) -> bool:
    """Does the raw tweet text carry a retweet marker for one of our accounts?

    Checked on the original text (normalization strips the marker).  The
    handle match is case-insensitive and bounded, so a handle that is a
    prefix of another never matches the longer one.
    """
    if not handles:
        return False
    return corporate_retweet_pattern(handles).search(text) is not None


class UniquenessTracker:
    """Incremental uniqueness test against all previously seen tweets.

    A tweet is unique when its normalized text is more than `threshold` edits
    away from every tweet seen before it.  Exact repeats short-circuit (their
    distance to the earlier copy is zero), and distance comparisons only run
    against distinct prior texts whose length is within the threshold.
    """

    def __init__(self, threshold: int = 10) -> None:
        self.threshold = threshold
        self._seen: set[str] = set()
        self._distinct: list[str] = []

    def observe(self, normalized: str) -> bool:
        """Record one tweet (already normalized); return whether it was unique."""
        if normalized in self._seen:
            return False
        unique = all(
            levenshtein_gt(normalized, prior, self.threshold) for prior in self._distinct
        )
        self._seen.add(normalized)
        self._distinct.append(normalized)
        return unique


def is_unique_tweet(candidate: str, prior_normalized: Iterable[str], threshold: int = 10) -> bool:
    """One-shot form: is the normalized candidate > threshold edits from all priors?"""
    return all(levenshtein_gt(candidate, prior, threshold) for prior in prior_normalized)


def update_term_histogram(histogram: Counter[str], normalized_text: str) -> None:
    histogram.update(tokenize(normalized_text))


def vocabulary_entropy(histogram: Counter[str]) -> float:
    """Shannon entropy of the term frequency distribution, in bits."""
    total = sum(histogram.values())
    if total == 0:
        return 0.0
    entropy = 0.0
    for count in histogram.values():
        p = count / total
        entropy -= p * math.log2(p)
    return entropy


def clamp_monotone(counts: Iterable[int]) -> list[int]:
    """Running maximum: repairs transient drops in cumulative counters."""
    clamped: list[int] = []
    high = 0
    for value in counts:
        if value > high:
            high = value
        clamped.append(high)
    return clamped


def interpolate_share_deltas(snapshots: Sequence[tuple[int, int]]) -> list[tuple[int, int]]:
    """Turn cumulative share snapshots into per-minute increments.

    `snapshots` is time-sorted (minute, cumulative_count) with counts already
    clamped non-decreasing.  Each increase is spread over the minutes since
    the previous snapshot with integer floor interpolation, so increments are
    non-negative and sum exactly to last count minus first count.  Nothing is
    emitted before the first snapshot or for a single snapshot; the opening
    level is carried separately (see shares_known_at).
    """
    deltas: list[tuple[int, int]] = []
    for (m0, c0), (m1, c1) in zip(snapshots, snapshots[1:]):
        rise = c1 - c0
        span = m1 - m0
        if rise < 0:
            raise ValueError("snapshots must be clamped non-decreasing")
        if rise == 0:
            continue
        if span <= 0:
            deltas.append((m1, rise))
            continue
        previous = 0
        for step in range(1, span + 1):
            level = rise * step // span
            if level > previous:
                deltas.append((m0 + step, level - previous))
                previous = level
    return deltas


def shares_known_at(snapshots: Sequence[tuple[int, int]], minute: int) -> int:
    """Interpolated cumulative share count through the given minute (inclusive).

    Zero before the first snapshot (no information), the first snapshot's
    level from then on, plus interpolated increments as they accrue.
    """
    if not snapshots or minute < snapshots[0][0]:
        return 0
    total = snapshots[0][1]
    for m, delta in interpolate_share_deltas(snapshots):
        if m <= minute:
            total += delta
    return total
