"""Independent reference implementations the test suite checks against.

Everything here is deliberately written the slow, obvious way (full DP
matrices, exact rational arithmetic, brute-force enumeration) so that
agreement with the package's optimized code is meaningful.  Each run_*
function executes one sized comparison suite and returns the number of
cases it checked; the acceptance gate times them as a group.
"""

from __future__ import annotations

import math
import string
from collections import Counter
from fractions import Fraction

import numpy as np

from newsflow.ingest import ArticleSeries
from newsflow.events import ReferralClass
from newsflow.lifecycle import shelf_life
from newsflow.regress import (
    FEATURE_NAMES,
    LOG_TRANSFORMED,
    aic_value,
    design_columns,
    fit_ols,
    scope_terms,
    stepwise_select,
    transform_features,
)
from newsflow.social import levenshtein, vocabulary_entropy


# ----- edit distance -----


def ref_levenshtein(a: str, b: str) -> int:
    """Textbook full-matrix edit distance."""
    m, n = len(a), len(b)
    d = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m + 1):
        d[i][0] = i
    for j in range(n + 1):
        d[0][j] = j
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost)
    return d[m][n]


_ALPHABETS = ("ab", "abc", string.ascii_lowercase, string.ascii_letters + " @:#")


def random_string_pair(rng: np.random.Generator) -> tuple[str, str]:
    alphabet = _ALPHABETS[int(rng.integers(0, len(_ALPHABETS)))]
    la = int(rng.integers(0, 26))
    lb = int(rng.integers(0, 26))
    a = "".join(alphabet[i] for i in rng.integers(0, len(alphabet), size=la))
    if rng.random() < 0.5:
        # Mutated copy: distances near the uniqueness threshold matter most.
        chars = list(a)
        for _ in range(int(rng.integers(0, 6))):
            op = rng.integers(0, 3)
            pos = int(rng.integers(0, max(len(chars), 1)))
            if op == 0 and chars:
                chars[min(pos, len(chars) - 1)] = alphabet[
                    int(rng.integers(0, len(alphabet)))
                ]
            elif op == 1:
                chars.insert(pos, alphabet[int(rng.integers(0, len(alphabet)))])
            elif op == 2 and chars:
                del chars[min(pos, len(chars) - 1)]
        b = "".join(chars)
    else:
        b = "".join(alphabet[i] for i in rng.integers(0, len(alphabet), size=lb))
    return a, b


def run_levenshtein_suite(n_pairs: int = 10_000, seed: int = 1301) -> int:
    rng = np.random.default_rng(seed)
    for _ in range(n_pairs):
        a, b = random_string_pair(rng)
        expected = ref_levenshtein(a, b)
        got = levenshtein(a, b)
        assert got == expected, f"levenshtein({a!r}, {b!r}) = {got}, expected {expected}"
    return n_pairs


# ----- entropy -----


def ref_entropy_bits(tokens) -> float:
    """Direct -sum(p log2 p) over the token histogram, fsum for stability."""
    counts = Counter(tokens)
    total = sum(counts.values())
    if total == 0:
        return 0.0
    return -math.fsum(
        (c / total) * math.log2(c / total) for c in counts.values()
    )


def run_entropy_suite(n_cases: int = 300, seed: int = 907) -> int:
    rng = np.random.default_rng(seed)
    vocab = [f"w{i}" for i in range(64)]
    for case in range(n_cases):
        size = int(rng.integers(0, 400))
        weights = rng.dirichlet(np.full(len(vocab), 0.3))
        tokens = [vocab[i] for i in rng.choice(len(vocab), size=size, p=weights)]
        expected = ref_entropy_bits(tokens)
        got = vocabulary_entropy(Counter(tokens))
        assert abs(got - expected) <= 1e-12, (
            f"entropy case {case}: {got} vs {expected}"
        )
    return n_cases


# ----- shelf life -----


def make_visit_series(
    counts, origin_minute: int = 28_401_120, article_id: str = "oracle"
) -> ArticleSeries:
    """An ArticleSeries holding exactly the given per-minute visit counts."""
    series = ArticleSeries(article_id)
    for minute, count in enumerate(counts):
        ts = (origin_minute + minute) * 60
        for _ in range(int(count)):
            series.observe_visit(ts, ReferralClass.INTERNAL)
    return series


def ref_shelf_life_minutes(counts, ell: float, horizon: int) -> int:
    """First minute index whose running total reaches ell of the horizon total.

    Minute zero is the first visit, so leading empty minutes in the raw
    counts are dropped before anything is measured, exactly like a series
    whose grid anchors on its first observed visit.
    """
    counts = list(counts)
    while counts and counts[0] == 0:
        counts.pop(0)
    window = counts[:horizon]
    total = sum(window)
    target = ell * total
    running = 0
    for minute, count in enumerate(window):
        running += count
        if running >= target:
            return minute
    return len(window)


def run_shelf_life_suite(n_series: int = 1000, seed: int = 4111) -> int:
    rng = np.random.default_rng(seed)
    compared = 0
    case = 0
    while compared < n_series:
        case += 1
        n_minutes = int(rng.integers(1, 240))
        lam = float(rng.uniform(0.05, 4.0))
        counts = rng.poisson(lam, size=n_minutes)
        if counts.sum() == 0:
            counts[int(rng.integers(0, n_minutes))] = 1
        # Sprinkle shapes the plain Poisson draw rarely produces.
        if case % 7 == 0:
            counts[: n_minutes // 2] = 0
        if case % 11 == 0:
            counts[-1] += int(rng.integers(1, 50))
        ell = float(rng.uniform(0.05, 0.95))
        horizon = int(rng.integers(max(n_minutes // 2, 1), n_minutes + 60))
        if counts[:horizon].sum() == 0:
            # A visit-free horizon has no defined shelf-life; draw another.
            continue
        series = make_visit_series(counts)
        got = shelf_life(
            series, ell=ell, horizon_minutes=horizon, truncated_ok=True
        ).tau_minutes
        expected = ref_shelf_life_minutes(counts, ell, horizon)
        assert got == expected, (
            f"shelf-life case {case}: tau {got} vs {expected} "
            f"(ell={ell}, horizon={horizon})"
        )
        compared += 1
    return compared


# ----- canonical visit-curve fixtures -----


def blueprint_for_kernel(profile_class: str, kernel: dict, total: float):
    """A bare blueprint carrying just what kernel_rates needs."""
    from newsflow.simgen import Blueprint

    return Blueprint(
        article_id=f"fx-{profile_class}",
        section="news",
        profile_class=profile_class,
        publication_ts=1704067200,
        total_visits=total,
        kernel=kernel,
        burst_log=0.0,
        tweets_per_visit=0.0,
        fb_per_tweet=0.0,
        unique_fraction=0.0,
        corporate_fraction=0.0,
        vocab_size=12,
        seed=(0, 0),
    )


def noiseless_counts(blueprint, n_minutes: int = 780) -> np.ndarray:
    """Integer-rounded expected rate curve, grid length pinned.

    A sharply decaying kernel can round to zero before the end of the
    window; one sentinel visit in the final minute keeps the grid at full
    length without touching the analyzed span.
    """
    from newsflow.simgen import kernel_rates

    counts = np.round(kernel_rates(blueprint, n_minutes=n_minutes)).astype(int)
    counts[-1] = max(counts[-1], 1)
    return counts


def canonical_class_fixtures(
    per_class: int = 12,
    total: float = 16_000.0,
    n_minutes: int = 780,
    seed: int = 6007,
):
    """Noiseless per-minute visit counts for every profile class.

    Counts are the expected rate curves of randomly drawn class kernels,
    rounded to integers: no sampling noise, no referral burst.  Returns
    (class_label, counts) pairs.
    """
    from newsflow.simgen import (
        PROFILE_ORDER,
        CorpusSpec,
        sample_article,
        spec_with,
    )

    spec = spec_with(
        CorpusSpec(),
        burst_sigma=0.0,
        visit_total_mean=total,
        visit_total_sigma=0.0,
    )
    rng = np.random.default_rng(seed)
    fixtures = []
    for cls in PROFILE_ORDER:
        for k in range(per_class):
            blueprint = sample_article(
                spec,
                rng,
                article_id=f"{cls}-{k}",
                section="news",
                profile_class=cls,
            )
            fixtures.append((cls, noiseless_counts(blueprint, n_minutes)))
    return fixtures


# ----- least squares -----


def ref_ols_exact(design: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Solve the normal equations in exact rational arithmetic.

    Requires the design to have full column rank.  Every float converts to
    a Fraction exactly, so the returned coefficients are the true normal-
    equation solution with no rounding at all.
    """
    n, p = design.shape
    dx = [[Fraction(float(design[i, j])) for j in range(p)] for i in range(n)]
    fy = [Fraction(float(v)) for v in y]
    ata = [
        [sum(dx[i][r] * dx[i][c] for i in range(n)) for c in range(p)]
        for r in range(p)
    ]
    aty = [sum(dx[i][r] * fy[i] for i in range(n)) for r in range(p)]
    # Gaussian elimination with partial pivoting, all exact.
    m = [row[:] + [rhs] for row, rhs in zip(ata, aty)]
    for col in range(p):
        pivot = max(range(col, p), key=lambda r: abs(m[r][col]))
        if m[pivot][col] == 0:
            raise ValueError("design is column rank deficient")
        m[col], m[pivot] = m[pivot], m[col]
        for r in range(p):
            if r != col and m[r][col] != 0:
                factor = m[r][col] / m[col][col]
                m[r] = [a - factor * b for a, b in zip(m[r], m[col])]
    beta = [m[r][p] / m[r][r] for r in range(p)]
    return np.array([float(b) for b in beta])


_LOG_IDX = tuple(FEATURE_NAMES.index(name) for name in LOG_TRANSFORMED)


def random_raw_features(rng: np.random.Generator, n: int) -> np.ndarray:
    """Raw feature rows shaped like real snapshots (counts, entropy, fractions)."""
    raw = np.empty((n, len(FEATURE_NAMES)))
    for j in range(len(FEATURE_NAMES)):
        if j in _LOG_IDX:
            raw[:, j] = rng.lognormal(mean=3.0, sigma=1.0, size=n)
        elif FEATURE_NAMES[j] == "tweet_entropy":
            raw[:, j] = rng.uniform(0.0, 8.0, size=n)
        else:
            raw[:, j] = rng.uniform(0.0, 1.0, size=n)
    return raw


def run_ols_suite(n_systems: int = 100, seed: int = 7717) -> int:
    rng = np.random.default_rng(seed)
    terms = scope_terms(tuple(range(len(FEATURE_NAMES))), include_interactions=False)
    for case in range(n_systems):
        n = int(rng.integers(40, 120))
        raw = random_raw_features(rng, n)
        y = rng.normal(size=n) + transform_features(raw)[:, 0]
        model = fit_ols(raw, y, terms=terms)
        design = design_columns(transform_features(raw), terms)
        expected = ref_ols_exact(design, y)
        scale = max(float(np.linalg.norm(expected)), 1.0)
        err = float(np.linalg.norm(model.coefficients - expected)) / scale
        assert err <= 1e-8, f"ols case {case}: relative error {err:.3e}"
    return n_systems


# ----- stepwise selection -----


def orthonormal_feature_design(
    rng: np.random.Generator, n: int, k: int
) -> tuple[np.ndarray, list[tuple[int, ...]], np.ndarray]:
    """Raw features whose transformed main-effect columns are orthonormal.

    Columns are also orthogonal to the intercept, which makes greedy AIC
    search provably equivalent to exhaustive best-subset, so the two must
    agree exactly.  Count-like features are warped through expm1 so the
    model's log1p transform lands back on the orthonormal values.
    """
    base = np.column_stack([np.ones(n), rng.normal(size=(n, k))])
    q, _ = np.linalg.qr(base)
    ortho = q[:, 1 : k + 1]  # unit columns, orthogonal to the constant
    feature_idx = tuple(range(k))
    raw = np.zeros((n, len(FEATURE_NAMES)))
    for pos, j in enumerate(feature_idx):
        if j in _LOG_IDX:
            raw[:, j] = np.expm1(ortho[:, pos])
        else:
            raw[:, j] = ortho[:, pos]
    terms = scope_terms(feature_idx, include_interactions=False)
    return raw, terms, ortho


def exhaustive_best_subset(
    design: np.ndarray, y: np.ndarray
) -> tuple[frozenset[int], float]:
    """Best AIC over all subsets of the non-intercept columns.

    The intercept (column 0) is always kept, matching the search the
    package runs.  Returns the winning column subset and its AIC.
    """
    p = design.shape[1]
    best: tuple[float, frozenset[int]] | None = None
    for mask in range(2 ** (p - 1)):
        cols = [0] + [j for j in range(1, p) if mask >> (j - 1) & 1]
        sub = design[:, cols]
        beta, _, _, _ = np.linalg.lstsq(sub, y, rcond=None)
        resid = y - sub @ beta
        rss = float(resid @ resid)
        aic = aic_value(len(y), rss, len(cols) - 1)
        key = (aic, frozenset(cols[1:]))
        if best is None or key[0] < best[0] - 1e-12:
            best = key
    assert best is not None
    return best[1], best[0]


def run_stepwise_suite(n_designs: int = 40, seed: int = 5501) -> int:
    rng = np.random.default_rng(seed)
    for case in range(n_designs):
        k = int(rng.integers(2, 6))  # up to five movable terms
        n = int(rng.integers(30, 80))
        raw, terms, ortho = orthonormal_feature_design(rng, n, k)
        active = rng.random(k) < 0.6
        beta = np.where(active, rng.normal(scale=3.0, size=k), 0.0)
        y = ortho @ beta + rng.normal(scale=1.0, size=n)
        model = stepwise_select(raw, y, scope=terms)
        chosen = frozenset(
            pos
            for pos, (term, kept) in enumerate(zip(model.terms, model.retained))
            if term and kept
        )
        design = design_columns(transform_features(raw), terms)
        expected_cols, expected_aic = exhaustive_best_subset(design, y)
        assert chosen == expected_cols, (
            f"stepwise case {case}: chose {sorted(chosen)}, "
            f"exhaustive found {sorted(expected_cols)}"
        )
        assert abs(model.aic - expected_aic) <= 1e-9 * max(abs(expected_aic), 1.0), (
            f"stepwise case {case}: AIC {model.aic} vs {expected_aic}"
        )
    return n_designs
