"""Seasonality handling, shelf life, and visit-curve classification."""

import math

import numpy as np
import pytest

from newsflow.events import ReferralClass
from newsflow.ingest import ArticleSeries
from newsflow.lifecycle import (
    SeasonalityProfile,
    build_seasonality_profile,
    classify_profile,
    cumulative_hours_equivalent,
    flat_profile,
    minute_weights,
    shelf_life,
    to_hours_equivalent,
)
from newsflow.simgen import kernel_rates

from oracles import (
    blueprint_for_kernel,
    canonical_class_fixtures,
    make_visit_series,
    noiseless_counts,
    ref_shelf_life_minutes,
    run_shelf_life_suite,
)

START = 1704067200  # Monday 2024-01-01 00:00 UTC, hour-of-week index 0


# ----- seasonality profiles -----


def lopsided_profile() -> SeasonalityProfile:
    weights = [1.0] * 168
    weights[0] = 1.5
    weights[1] = 0.5
    return SeasonalityProfile(weights=tuple(weights))


def test_profile_validates_mean_and_positivity():
    with pytest.raises(ValueError):
        SeasonalityProfile(weights=(1.0,) * 167)
    bad_mean = [1.0] * 168
    bad_mean[3] = 2.0
    with pytest.raises(ValueError):
        SeasonalityProfile(weights=tuple(bad_mean))
    zeros = [1.0] * 168
    zeros[0] = 0.0
    zeros[1] = 2.0
    with pytest.raises(ValueError):
        SeasonalityProfile(weights=tuple(zeros))


def test_build_profile_recovers_weekly_pattern():
    rng = np.random.default_rng(5)
    pattern = 1.0 + 0.5 * np.sin(np.arange(168) * 2 * np.pi / 168)
    hourly = np.tile(pattern, 3) * 1000.0
    profile = build_seasonality_profile(START, hourly)
    got = np.array(profile.weights)
    expected = pattern / pattern.mean()
    assert np.allclose(got, expected, rtol=1e-9)
    assert profile.imputed_hours == ()
    assert abs(np.mean(profile.weights) - 1.0) < 1e-12
    del rng


def test_build_profile_imputes_missing_bins():
    pattern = np.full(168, 500.0)
    hourly = np.tile(pattern, 2)
    hourly[10] = np.nan
    hourly[10 + 168] = np.nan  # hour-of-week bin 10 never observed
    hourly[20] = np.nan        # bin 20 still has one observation
    profile = build_seasonality_profile(START, hourly)
    assert 10 in profile.imputed_hours
    assert 20 not in profile.imputed_hours
    assert abs(np.mean(profile.weights) - 1.0) < 1e-9


def test_build_profile_needs_two_weeks():
    with pytest.raises(ValueError):
        build_seasonality_profile(START, np.ones(335))


def test_hours_equivalent_flat_is_identity():
    profile = flat_profile()
    assert to_hours_equivalent(3600.0, START, profile) == pytest.approx(1.0)
    assert to_hours_equivalent(90.0, START + 12345, profile) == pytest.approx(90 / 3600)
    assert to_hours_equivalent(0.0, START, profile) == 0.0


def test_hours_equivalent_weights_segments():
    profile = lopsided_profile()
    assert to_hours_equivalent(3600.0, START, profile) == pytest.approx(1.5)
    assert to_hours_equivalent(7200.0, START, profile) == pytest.approx(2.0)
    assert to_hours_equivalent(1800.0, START + 3600, profile) == pytest.approx(0.25)
    # Straddling the boundary: half an hour at 1.5, half at 0.5.
    assert to_hours_equivalent(3600.0, START + 1800, profile) == pytest.approx(1.0)


def test_minute_weights_and_cumulative():
    profile = lopsided_profile()
    w = minute_weights(profile, START, 120)
    assert (w[:60] == 1.5).all() and (w[60:] == 0.5).all()
    cum = cumulative_hours_equivalent(profile, START, 120)
    assert len(cum) == 121
    assert cum[0] == 0.0
    assert cum[60] == pytest.approx(1.5)
    assert cum[120] == pytest.approx(2.0)
    with pytest.raises(ValueError):
        minute_weights(profile, START + 30, 10)


# ----- shelf life -----


def series_from(counts):
    return make_visit_series(counts, origin_minute=START // 60)


def test_shelf_life_front_loaded_curve():
    result = shelf_life(series_from([90, 10]), ell=0.9, truncated_ok=True)
    assert result.tau_minutes == 0
    assert result.total_visits_at_horizon == 100


def test_shelf_life_tail_loaded_curve():
    counts = [10] + [0] * 8 + [90]
    result = shelf_life(series_from(counts), ell=0.9, truncated_ok=True)
    assert result.tau_minutes == 9


def test_shelf_life_exact_threshold_tie():
    result = shelf_life(series_from([50, 50]), ell=0.5, truncated_ok=True)
    assert result.tau_minutes == 0


def test_shelf_life_horizon_caps_the_total():
    counts = [10] * 10 + [1000]
    capped = shelf_life(series_from(counts), ell=0.9, horizon_minutes=10, truncated_ok=True)
    assert capped.total_visits_at_horizon == 100
    assert capped.tau_minutes == 8  # 90 of the first 100 visits
    full = shelf_life(series_from(counts), ell=0.9, truncated_ok=True)
    assert full.tau_minutes == 10


def test_shelf_life_rejects_empty_series():
    series = ArticleSeries("empty")
    with pytest.raises(ValueError):
        shelf_life(series, truncated_ok=True)
    with pytest.raises(ValueError):
        shelf_life(series_from([3]), ell=1.0, truncated_ok=True)


def test_shelf_life_default_requires_full_week():
    with pytest.raises(ValueError):
        shelf_life(series_from([5, 5]))


def test_shelf_life_matches_reference_scan():
    rng = np.random.default_rng(99)
    for _ in range(40):
        n = int(rng.integers(1, 200))
        counts = rng.poisson(1.2, size=n)
        if counts.sum() == 0:
            counts[0] = 3
        ell = float(rng.uniform(0.1, 0.95))
        got = shelf_life(series_from(counts), ell=ell, truncated_ok=True).tau_minutes
        assert got == ref_shelf_life_minutes(counts, ell, 10080)


def test_shelf_life_reference_suite_smoke():
    run_shelf_life_suite(n_series=60, seed=12)


def test_decreasing_story_has_shorter_shelf_life_than_steady():
    fast = kernel_rates(
        blueprint_for_kernel("decreasing", {"shape": 0.0, "half_life_hours": 8.0}, 20000.0)
    )
    slow = kernel_rates(
        blueprint_for_kernel("steady", {"shape": 2.0, "level_hours": 24.0,
                                        "half_life_hours": 8.0}, 20000.0)
    )
    tau_fast = shelf_life(
        series_from(np.round(fast).astype(int)), truncated_ok=True
    ).tau_minutes
    tau_slow = shelf_life(
        series_from(np.round(slow).astype(int)), truncated_ok=True
    ).tau_minutes
    assert tau_fast < tau_slow


# ----- curve classification -----


def classify_counts(counts):
    return classify_profile(series_from(counts)).label


def test_classifier_canonical_shapes():
    total = 16000.0
    n = 780
    cases = {
        "decreasing": {"shape": 0.0, "half_life_hours": 8.0},
        "delayed_decreasing": {"shape": 1.0, "plateau_hours": 3.2,
                               "half_life_hours": 6.0},
        "steady": {"shape": 2.0, "level_hours": 24.0, "half_life_hours": 8.0},
        "increasing": {"shape": 3.0, "ramp_hours": 16.0, "half_life_hours": 10.0},
    }
    width = 0.85
    spread = math.sqrt(2 * math.pi) * width / 2 * math.erf(1 / (width * math.sqrt(2)))
    cases["rebounding"] = {
        "shape": 4.0,
        "half_life_hours": 1.8,
        "pulse_center_hours": 9.0,
        "pulse_width_hours": width,
        "pulse_amplitude": 0.55 / spread,
    }
    for expected, kernel in cases.items():
        counts = noiseless_counts(blueprint_for_kernel(expected, kernel, total), n)
        got = classify_counts(counts)
        assert got == expected, f"{expected} kernel labeled {got}"


def test_classifier_on_random_noiseless_kernels():
    fixtures = canonical_class_fixtures(per_class=3, seed=414)
    correct = sum(
        1 for cls, counts in fixtures if classify_counts(counts) == cls
    )
    assert correct >= len(fixtures) - 1


def test_classifier_requires_coverage():
    with pytest.raises(ValueError):
        classify_counts([5] * 100)  # under twelve hours of grid
    sparse = [0] * 770
    for i in range(0, 760, 38):
        sparse[i] = 1  # twenty non-empty minutes, under the floor of thirty
    with pytest.raises(ValueError):
        classify_counts(sparse)


def test_classifier_seasonality_axis_stretches_coverage():
    # Under a profile that halves the night weights, 720 wall minutes no
    # longer reach twelve hours-equivalent, so the same series is rejected.
    weights = [1.0] * 168
    for h in range(0, 12):
        weights[h] = 0.5
    for h in range(12, 24):
        weights[h] = 1.5
    profile = SeasonalityProfile(weights=tuple(weights))
    counts = [10] * 730
    assert classify_profile(series_from(counts)).label == "steady"
    with pytest.raises(ValueError):
        classify_profile(series_from(counts), profile)
