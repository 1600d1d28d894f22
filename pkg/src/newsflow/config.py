"""Engine configuration: hosts, handles, horizons, thresholds.

Everything site-specific lives here rather than in code: the referral host
sets, the publisher's corporate accounts, the model horizons and targets, and
the classifier thresholds.  A config file is plain JSON with the same field
names; omitted fields keep their defaults.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path


@dataclass(frozen=True)
class ClassifierConfig:
    """Thresholds for the visit-profile classifier (all declared, not fitted)."""

    window_hours_equiv: float = 12.0
    smooth_minutes: int = 30
    steady_slope_frac: float = 0.10   # |drift over the window| < frac * peak -> steady
    plateau_minutes: int = 60         # early plateau length for delayed_decreasing
    plateau_frac: float = 0.20        # plateau = within this fraction of peak
    rebound_recovery_frac: float = 0.30  # recovery amount as fraction of peak
    rebound_trough_frac: float = 0.35    # the dip must reach this fraction of peak
    rebound_smooth_minutes: int = 120    # heavier smoothing for the rebound test
    delayed_excess_ratio: float = 1.15   # back-extrapolated start level / peak
    min_nonempty_minutes: int = 30


@dataclass(frozen=True)
class EngineConfig:
    site_hosts: tuple[str, ...] = ("site.example",)
    search_hosts: tuple[str, ...] = ("search.example",)
    corporate_handles: tuple[str, ...] = ("AJEnglish", "AJELive")
    news_sections: tuple[str, ...] = ("news",)

    horizons_minutes: tuple[int, ...] = (60, 360, 720, 1440)
    target_minutes: int = 4320        # live prediction target age (3 days)
    training_target_minutes: int = 4320

    monitoring_min_visits: int = 5
    monitoring_window_minutes: int = 600
    polling_top_k: int = 30
    polling_window_minutes: int = 5
    sample_min_visits: int = 100
    sample_window_minutes: int = 10080

    unique_edit_threshold: int = 10

    shelf_ell: float = 0.90
    shelf_horizon_minutes: int = 10080

    retrain_period_minutes: int = 1440
    min_training_articles: int = 30
    use_stepwise: bool = True

    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)

    def __post_init__(self) -> None:
        overlap = set(self.site_hosts) & set(self.search_hosts)
        if overlap:
            raise ValueError(f"site_hosts and search_hosts overlap: {sorted(overlap)}")
        if list(self.horizons_minutes) != sorted(self.horizons_minutes):
            raise ValueError("horizons_minutes must be ascending")

    def group_for_section(self, section: str) -> str:
        """Model group for a section label: the News section vs everything else."""
        return "news" if section.lower() in self.news_sections else "other"

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def load_config(path: str | Path) -> EngineConfig:
    raw = json.loads(Path(path).read_text())
    classifier = ClassifierConfig(**raw.pop("classifier", {}))
    for key in (
        "site_hosts",
        "search_hosts",
        "corporate_handles",
        "news_sections",
        "horizons_minutes",
    ):
        if key in raw:
            raw[key] = tuple(raw[key])
    return replace(EngineConfig(classifier=classifier), **raw)


def save_config(config: EngineConfig, path: str | Path) -> None:
    Path(path).write_text(config.to_json() + "\n")
