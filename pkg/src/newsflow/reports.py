"""Analysis reports over an ingested corpus, written as CSV.

Three report kinds mirror the engine's headline analyses:

* ``fig6``      - predictability curves: in-sample r-squared of the full
                  feature model vs the visits-only model across snapshot
                  cutoffs, with the per-cutoff gap;
* ``shelflife`` - histogram of 90% shelf-life per section group plus
                  summary statistics and the shelf-life/total correlation;
* ``table2``    - the corpus summary statistics table.

All reports operate on articles that pass the analysis sample filter
(enough first-week visits).  Correlations over degenerate inputs are
written as the string ``nan``.
"""

from __future__ import annotations

import csv
import logging

import numpy as np

from .config import EngineConfig
from .ingest import ArticleSeries, SeriesStore
from .lifecycle import shelf_life
from .predict import snapshot_features
from .regress import r_squared_curve
from .simgen import corpus_stats

log = logging.getLogger(__name__)

REPORT_KINDS = ("fig6", "shelflife", "table2")
REPORT_GROUPS = ("news", "indepth", "all")

DEFAULT_CUTOFFS = (5, 10, 15, 20, 30, 45, 60, 90, 120, 180, 240, 360, 480, 720, 1080, 1440)

SHELF_BIN_HOURS = 6.0


def analysis_series(
    store: SeriesStore, group: str = "all", truncated_ok: bool = False
) -> list[ArticleSeries]:
    """Sample-filtered articles for one section group, id-ordered."""
    if group not in REPORT_GROUPS:
        raise ValueError(f"group must be one of {REPORT_GROUPS}, got {group!r}")
    config = store.config
    selected = []
    for article_id in sorted(store.articles):
        series = store.articles[article_id]
        if series.origin_minute is None:
            continue
        age_minutes = (store.clock - series.first_visit_ts) // 60
        if not truncated_ok and age_minutes < config.sample_window_minutes:
            continue
        if series.total_visits(config.sample_window_minutes) < config.sample_min_visits:
            continue
        if group != "all" and series.section_label != group:
            continue
        selected.append(series)
    return selected


# ----- predictability curves -----


def predictability_rows(
    series_list,
    config: EngineConfig | None = None,
    cutoffs=DEFAULT_CUTOFFS,
) -> list[dict]:
    """Fit both model families at each cutoff; returns one row per cutoff."""
    config = config or EngineConfig()
    if len(series_list) < 2:
        raise ValueError("predictability curves need at least two articles")
    y = np.log1p(
        [float(s.total_visits(config.sample_window_minutes)) for s in series_list]
    )
    cache: dict[int, np.ndarray] = {}

    def provider(cutoff: int) -> np.ndarray:
        if cutoff not in cache:
            cache[cutoff] = np.vstack(
                [snapshot_features(s, cutoff, config).as_array() for s in series_list]
            )
        return cache[cutoff]

    full = dict(r_squared_curve(provider, cutoffs, y, model_spec="full"))
    visits_only = dict(r_squared_curve(provider, cutoffs, y, model_spec="visits_only"))
    rows = []
    for cutoff in cutoffs:
        rows.append(
            {
                "cutoff_minutes": cutoff,
                "r2_visits_only": visits_only[cutoff],
                "r2_full": full[cutoff],
                "gap": full[cutoff] - visits_only[cutoff],
            }
        )
    return rows


def crossover_stats(rows, reference_cutoff: int = 20) -> dict:
    """Head-start summary: the gap at the reference cutoff and how much
    longer the visits-only model needs to match the full model there."""
    by_cutoff = {row["cutoff_minutes"]: row for row in rows}
    if reference_cutoff not in by_cutoff:
        raise ValueError(f"rows lack the reference cutoff {reference_cutoff}")
    reference = by_cutoff[reference_cutoff]["r2_full"]
    crossover = None
    for row in sorted(rows, key=lambda r: r["cutoff_minutes"]):
        if row["r2_visits_only"] >= reference:
            crossover = row["cutoff_minutes"]
            break
    return {
        "r2_full_at_reference": reference,
        "gap_at_reference": by_cutoff[reference_cutoff]["gap"],
        "reference_cutoff": reference_cutoff,
        "visits_only_crossover_cutoff": crossover,
    }


def write_fig6_csv(path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["cutoff_minutes", "r2_visits_only", "r2_full", "gap"]
        )
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


# ----- shelf life -----


def shelf_life_table(series_list, config: EngineConfig | None = None) -> list[dict]:
    """Shelf-life per article: group, tau, and the 7-day total."""
    config = config or EngineConfig()
    table = []
    for series in series_list:
        # Analysis selection already required a full week of observation;
        # grids that end at an earlier last visit are exact, not truncated.
        result = shelf_life(
            series,
            ell=config.shelf_ell,
            horizon_minutes=config.shelf_horizon_minutes,
            truncated_ok=True,
        )
        table.append(
            {
                "article_id": series.article_id,
                "group": series.section_label,
                "tau_minutes": result.tau_minutes,
                "total_visits": result.total_visits_at_horizon,
            }
        )
    return table


def shelf_life_pearson(table) -> float:
    """Pearson correlation of shelf-life against the 7-day total; nan when
    either quantity is constant."""
    if len(table) < 2:
        return float("nan")
    tau = np.array([row["tau_minutes"] for row in table], dtype=float)
    totals = np.array([row["total_visits"] for row in table], dtype=float)
    if tau.std() == 0.0 or totals.std() == 0.0:
        return float("nan")
    return float(np.corrcoef(tau, totals)[0, 1])


def write_shelflife_csv(path, table) -> None:
    """Histogram layout: hist rows carry bins, summary rows carry values."""
    groups = sorted({row["group"] for row in table})
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row_kind", "group", "lo_hours", "hi_hours", "count", "value"])
        for group in groups:
            taus_hours = [
                row["tau_minutes"] / 60.0 for row in table if row["group"] == group
            ]
            if not taus_hours:
                continue
            n_bins = int(np.ceil((max(taus_hours) + 1e-9) / SHELF_BIN_HOURS))
            for b in range(n_bins):
                lo = b * SHELF_BIN_HOURS
                hi = lo + SHELF_BIN_HOURS
                count = sum(1 for t in taus_hours if lo <= t < hi)
                writer.writerow(["hist", group, lo, hi, count, ""])
            writer.writerow(
                ["mean_tau_hours", group, "", "", "", float(np.mean(taus_hours))]
            )
        pearson = shelf_life_pearson(table)
        writer.writerow(
            ["pearson_tau_total", "all", "", "", "", "nan" if np.isnan(pearson) else pearson]
        )


# ----- summary table -----


def write_table2_csv(path, stats: dict) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value"])
        for metric, value in stats.items():
            writer.writerow([metric, value])


def generate_report(
    store: SeriesStore,
    kind: str,
    group: str,
    out_path,
    config: EngineConfig | None = None,
    cutoffs=DEFAULT_CUTOFFS,
) -> dict:
    """Produce one report CSV; returns the headline numbers for display."""
    if kind not in REPORT_KINDS:
        raise ValueError(f"kind must be one of {REPORT_KINDS}, got {kind!r}")
    config = config or store.config
    series_list = analysis_series(store, group)
    if not series_list:
        raise ValueError(f"no analyzable articles for group {group!r}")
    if kind == "table2":
        stats = corpus_stats(series_list, config)
        write_table2_csv(out_path, stats)
        return stats
    if kind == "fig6":
        rows = predictability_rows(series_list, config, cutoffs)
        write_fig6_csv(out_path, rows)
        return crossover_stats(rows) if 20 in set(cutoffs) else {"rows": len(rows)}
    table = shelf_life_table(series_list, config)
    write_shelflife_csv(out_path, table)
    means = {}
    for row in table:
        means.setdefault(row["group"], []).append(row["tau_minutes"] / 60.0)
    return {
        "articles": len(table),
        "mean_tau_hours": {g: float(np.mean(v)) for g, v in sorted(means.items())},
        "pearson_tau_total": shelf_life_pearson(table),
    }
