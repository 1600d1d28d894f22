"""Linear modeling: transforms, interaction designs, OLS, AIC, stepwise search.

The model family is fixed: ten article features, log(x+1) on the count-like
ones, an intercept, and optionally all 45 unordered pairwise products of the
transformed features.  Fitting is least squares via pivoted QR with a relative
rank cutoff, so the routinely singular small-sample designs degrade cleanly
instead of blowing up.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

FEATURE_NAMES = (
    "visits",
    "referral_visits",
    "direct_visits",
    "fb_shares",
    "tweets",
    "mean_followers",
    "tweet_entropy",
    "unique_tweets",
    "unique_fraction",
    "corporate_fraction",
)

# Count-like inputs get log(x+1); entropy and the two fractions pass through.
LOG_TRANSFORMED = (
    "visits",
    "referral_visits",
    "direct_visits",
    "fb_shares",
    "tweets",
    "mean_followers",
    "unique_tweets",
)

# The reduced scope used for the visits-only comparison curves.
VISITS_ONLY_FEATURES = ("visits", "referral_visits", "direct_visits")

_LOG_IDX = tuple(FEATURE_NAMES.index(name) for name in LOG_TRANSFORMED)

RANK_CUTOFF = 1e-10


@dataclass(frozen=True)
class FeatureVector:
    visits: float
    referral_visits: float
    direct_visits: float
    fb_shares: float
    tweets: float
    mean_followers: float
    tweet_entropy: float
    unique_tweets: float
    unique_fraction: float
    corporate_fraction: float
    cutoff_minutes: int = 0
    article_id: str = ""
    section_label: str = "other"

    def __post_init__(self) -> None:
        if self.unique_tweets > self.tweets:
            raise ValueError("unique_tweets cannot exceed tweets")
        for name in ("unique_fraction", "corporate_fraction"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be within [0, 1], got {value}")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_NAMES], dtype=float)


def feature_matrix(vectors) -> np.ndarray:
    return np.vstack([v.as_array() for v in vectors])


def transform_features(raw: np.ndarray) -> np.ndarray:
    """log(x+1) on count-like columns of a (..., 10) raw feature array."""
    raw = np.asarray(raw, dtype=float)
    out = raw.copy()
    out[..., _LOG_IDX] = np.log1p(raw[..., _LOG_IDX])
    return out


def scope_terms(
    feature_indices: tuple[int, ...], include_interactions: bool
) -> list[tuple[int, ...]]:
    """Term list: () for the intercept, (i,) mains, (i, j) pairwise products."""
    terms: list[tuple[int, ...]] = [()]
    terms.extend((i,) for i in feature_indices)
    if include_interactions:
        for a in range(len(feature_indices)):
            for b in range(a + 1, len(feature_indices)):
                terms.append((feature_indices[a], feature_indices[b]))
    return terms


def term_label(term: tuple[int, ...]) -> str:
    if not term:
        return "intercept"
    return ":".join(FEATURE_NAMES[i] for i in term)


def design_columns(transformed: np.ndarray, terms) -> np.ndarray:
    """Evaluate each term on a (n, 10) transformed feature matrix."""
    transformed = np.atleast_2d(np.asarray(transformed, dtype=float))
    n = transformed.shape[0]
    columns = np.empty((n, len(terms)))
    for k, term in enumerate(terms):
        if not term:
            columns[:, k] = 1.0
        elif len(term) == 1:
            columns[:, k] = transformed[:, term[0]]
        else:
            columns[:, k] = transformed[:, term[0]] * transformed[:, term[1]]
    return columns


def build_design_matrix(
    transformed: np.ndarray,
    include_interactions: bool = True,
    feature_names: tuple[str, ...] = FEATURE_NAMES,
):
    """Full design matrix plus labels; 56 columns with interactions, else 11."""
    idx = tuple(FEATURE_NAMES.index(name) for name in feature_names)
    terms = scope_terms(idx, include_interactions)
    return design_columns(transformed, terms), [term_label(t) for t in terms]


@dataclass
class LinearModel:
    """A fitted least-squares model over a fixed term scope.

    Coefficients are aligned with `terms`; dropped (rank-deficient or
    deselected) terms carry coefficient 0 and False in `retained`.
    Predictions are reproducible from this object alone.
    """

    terms: list[tuple[int, ...]]
    coefficients: np.ndarray
    retained: np.ndarray
    n: int
    rss: float
    r_squared: float
    target: str = "log1p_visits"
    diagnostics: dict = field(default_factory=dict)

    @property
    def labels(self) -> list[str]:
        return [term_label(t) for t in self.terms]

    @property
    def k_active(self) -> int:
        """Retained non-intercept terms (the AIC k)."""
        return int(
            sum(1 for t, r in zip(self.terms, self.retained) if r and t)
        )

    @property
    def aic(self) -> float:
        return aic_value(self.n, self.rss, self.k_active)

    def predict_transformed(self, raw: np.ndarray) -> np.ndarray:
        """Model output on the target's transformed (log) scale."""
        transformed = transform_features(np.atleast_2d(raw))
        design = design_columns(transformed, self.terms)
        return design @ self.coefficients

    def predict_total(self, raw: np.ndarray, observed) -> np.ndarray:
        """Back-transformed visit total, clamped to never undershoot observed."""
        y = self.predict_transformed(raw)
        totals = np.expm1(y)
        return np.maximum(totals, np.asarray(observed, dtype=float))

    def to_dict(self) -> dict:
        return {
            "terms": [list(t) for t in self.terms],
            "labels": self.labels,
            "coefficients": self.coefficients.tolist(),
            "retained": self.retained.astype(int).tolist(),
            "n": self.n,
            "rss": self.rss,
            "r_squared": self.r_squared,
            "aic": None if math.isinf(self.aic) else self.aic,
            "target": self.target,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LinearModel":
        return cls(
            terms=[tuple(t) for t in data["terms"]],
            coefficients=np.asarray(data["coefficients"], dtype=float),
            retained=np.asarray(data["retained"], dtype=bool),
            n=int(data["n"]),
            rss=float(data["rss"]),
            r_squared=float(data["r_squared"]),
            target=data.get("target", "log1p_visits"),
        )

    def fingerprint(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()


def aic_value(n: int, rss: float, k: int) -> float:
    """AIC under a Gaussian likelihood with additive constants dropped."""
    if n < 1:
        raise ValueError("AIC needs n >= 1")
    if rss <= 0.0:
        return -math.inf
    return n * math.log(rss / n) + 2.0 * (k + 1)


def _solve_ls(design: np.ndarray, y: np.ndarray):
    """Pivoted-QR least squares with a relative rank cutoff.

    Returns (coefficients over all columns, rss, kept-column mask).
    """
    n, p = design.shape
    q, r, piv = sla.qr(design, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if len(diag) == 0 or diag[0] == 0.0:
        rank = 0
    else:
        rank = int(np.sum(diag >= RANK_CUTOFF * diag[0]))
    coefficients = np.zeros(p)
    kept = np.zeros(p, dtype=bool)
    if rank > 0:
        rhs = q.T @ y
        beta = sla.solve_triangular(r[:rank, :rank], rhs[:rank])
        coefficients[piv[:rank]] = beta
        kept[piv[:rank]] = True
    residuals = y - design @ coefficients
    rss = float(residuals @ residuals)
    return coefficients, rss, kept


def fit_ols(
    raw: np.ndarray,
    y: np.ndarray,
    terms=None,
    include_interactions: bool = True,
) -> LinearModel:
    """Least-squares fit of the term scope on raw features and targets."""
    raw = np.atleast_2d(np.asarray(raw, dtype=float))
    y = np.asarray(y, dtype=float)
    if raw.shape[0] != len(y):
        raise ValueError("row count mismatch between features and targets")
    if len(y) < 1:
        raise ValueError("need at least one example")
    if terms is None:
        terms = scope_terms(tuple(range(len(FEATURE_NAMES))), include_interactions)
    transformed = transform_features(raw)
    design = design_columns(transformed, terms)
    coefficients, rss, kept = _solve_ls(design, y)
    tss = float(np.sum((y - y.mean()) ** 2))
    r_squared = 0.0 if tss <= 0.0 else 1.0 - rss / tss
    return LinearModel(
        terms=list(terms),
        coefficients=coefficients,
        retained=kept,
        n=len(y),
        rss=rss,
        r_squared=r_squared,
    )


def stepwise_select(
    raw: np.ndarray,
    y: np.ndarray,
    scope=None,
    include_interactions: bool = True,
) -> LinearModel:
    """Bidirectional AIC stepwise search from the full scope.

    Each round tries every single-term removal and addition (the intercept
    is fixed), takes the best AIC improvement, and stops at a local minimum.
    Ties break toward the earlier term in scope order, so the search is
    deterministic.  Interactions may be kept without their main effects.
    """
    raw = np.atleast_2d(np.asarray(raw, dtype=float))
    y = np.asarray(y, dtype=float)
    if len(y) < 2:
        raise ValueError("stepwise selection needs at least two examples")
    if scope is None:
        scope = scope_terms(tuple(range(len(FEATURE_NAMES))), include_interactions)
    scope = list(scope)
    transformed = transform_features(raw)
    full_design = design_columns(transformed, scope)

    cache: dict[bytes, tuple] = {}

    def fit_subset(mask: np.ndarray):
        key = mask.tobytes()
        hit = cache.get(key)
        if hit is not None:
            return hit
        design = full_design[:, mask]
        coefficients, rss, kept = _solve_ls(design, y)
        sub_terms = [t for t, selected in zip(scope, mask) if selected]
        k = sum(1 for t, keep in zip(sub_terms, kept) if keep and t)
        result = (coefficients, rss, kept, aic_value(len(y), rss, k))
        cache[key] = result
        return result

    current = np.ones(len(scope), dtype=bool)
    _, _, _, current_aic = fit_subset(current)
    movable = [i for i, t in enumerate(scope) if t]

    improved = True
    while improved:
        improved = False
        best_aic = current_aic
        best_index = None
        for i in movable:
            candidate = current.copy()
            candidate[i] = ~candidate[i]
            _, _, _, candidate_aic = fit_subset(candidate)
            if candidate_aic < best_aic - 1e-12:
                best_aic = candidate_aic
                best_index = i
        if best_index is not None:
            current[best_index] = ~current[best_index]
            current_aic = best_aic
            improved = True

    coefficients, rss, kept, _ = fit_subset(current)
    full_coefficients = np.zeros(len(scope))
    full_retained = np.zeros(len(scope), dtype=bool)
    selected_positions = np.nonzero(current)[0]
    full_coefficients[selected_positions] = coefficients
    full_retained[selected_positions] = kept
    tss = float(np.sum((y - y.mean()) ** 2))
    r_squared = 0.0 if tss <= 0.0 else 1.0 - rss / tss
    return LinearModel(
        terms=scope,
        coefficients=full_coefficients,
        retained=full_retained,
        n=len(y),
        rss=rss,
        r_squared=r_squared,
        diagnostics={"selected_terms": int(current.sum()), "aic_path_end": current_aic},
    )


def r_squared_curve(snapshot_provider, cutoffs, y, model_spec: str = "full"):
    """In-sample r² of a fresh fit at each cutoff.

    snapshot_provider(cutoff) must return the (n, 10) raw feature matrix for
    the corpus at that article age; y is the fixed log-transformed target.
    model_spec is "full" (all ten features) or "visits_only".
    """
    if model_spec == "full":
        names = FEATURE_NAMES
    elif model_spec == "visits_only":
        names = VISITS_ONLY_FEATURES
    else:
        raise ValueError(f"unknown model_spec: {model_spec!r}")
    idx = tuple(FEATURE_NAMES.index(name) for name in names)
    terms = scope_terms(idx, include_interactions=True)
    curve = []
    for cutoff in cutoffs:
        raw = snapshot_provider(cutoff)
        model = fit_ols(raw, y, terms=terms)
        curve.append((cutoff, model.r_squared))
    return curve
