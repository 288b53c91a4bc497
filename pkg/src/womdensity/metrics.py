"""Descriptive statistics over rating events and the item-week panel.

Everything here is pure: score histograms, density rankings, the
first-week density ECDF, volume/revenue lag correlations, variable
summaries, and demographic coverage.  Densities are reported per
million estimated viewers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .dataset import Dataset, PanelRow, RaterProfile, RatingEvent, dedupe_ratings

PER_MILLION = 1e6


@dataclass
class ScoreHistogram:
    """Counts and fractions of scores 1..5."""

    counts: dict[int, int]
    fractions: Optional[dict[int, float]]
    total: int


@dataclass
class RankedItem:
    item_id: str
    title: str
    genres: tuple[str, ...]
    density_per_million: float


@dataclass
class DensityRanking:
    """Items ordered by first-week density, densest first.

    ``capped`` notes that fewer items were available than requested.
    """

    top: list[RankedItem]
    bottom: list[RankedItem]
    k: int
    capped: bool = False


@dataclass
class LagCorrelationTable:
    lags: list[int]
    correlations: list[Optional[float]]


@dataclass
class VariableSummary:
    mean: float
    sd: Optional[float]
    minimum: float
    maximum: float


@dataclass
class SummaryStats:
    variables: dict[str, VariableSummary] = field(default_factory=dict)
    totals: dict[str, int] = field(default_factory=dict)


@dataclass
class DemographicSummary:
    total_profiles: int
    gender_coverage: float
    age_coverage: float
    gender_shares: Optional[dict[str, float]]
    age_bracket_shares: Optional[dict[str, float]]


def score_histogram(events: Iterable[RatingEvent]) -> ScoreHistogram:
    """Tally scores 1..5; fractions are None for an empty input."""
    counts = {s: 0 for s in range(1, 6)}
    total = 0
    for ev in events:
        counts[ev.score] += 1
        total += 1
    if total == 0:
        return ScoreHistogram(counts=counts, fractions=None, total=0)
    fractions = {s: c / total for s, c in counts.items()}
    return ScoreHistogram(counts=counts, fractions=fractions, total=total)


def first_week_density_ecdf(panel: Sequence[PanelRow]) -> list[tuple[float, float]]:
    """Empirical CDF of first-week density per million viewers.

    Returns (value, cumulative probability) pairs over the distinct
    observed densities, non-decreasing and ending at probability 1.
    """
    densities = sorted(
        row.density * PER_MILLION for row in panel if row.week_index == 1
    )
    if not densities:
        raise ValueError("panel has no week-1 rows")
    n = len(densities)
    points: list[tuple[float, float]] = []
    for i, value in enumerate(densities, start=1):
        if points and points[-1][0] == value:
            points[-1] = (value, i / n)
        else:
            points.append((value, i / n))
    return points


def rank_by_density(panel: Sequence[PanelRow], dataset: Dataset,
                    k: int = 5) -> DensityRanking:
    """Top and bottom k items by first-week density per million viewers.

    Ties break on item id so the ordering is reproducible.  When fewer
    than k items have a first week, both lists hold all of them and the
    result is flagged as capped.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    items = {it.item_id: it for it in dataset.items}
    entries: list[RankedItem] = []
    for row in panel:
        if row.week_index != 1:
            continue
        item = items[row.item_id]
        entries.append(
            RankedItem(
                item_id=row.item_id,
                title=item.title,
                genres=item.genres,
                density_per_million=row.density * PER_MILLION,
            )
        )
    if not entries:
        raise ValueError("panel has no week-1 rows")
    entries.sort(key=lambda e: (-e.density_per_million, e.item_id))
    capped = k > len(entries)
    kk = min(k, len(entries))
    return DensityRanking(
        top=entries[:kk], bottom=entries[-kk:], k=k, capped=capped
    )


def lag_correlation(
    volume: Sequence[float], revenue: Sequence[float], max_lag: int = 3
) -> LagCorrelationTable:
    """Pearson correlation of volume at t with revenue at t - lag.

    Both series must be aligned to the same time index and long enough
    to leave at least three pairs at the largest lag.  A lag where
    either side is constant gets a None correlation.
    """
    v = np.asarray(volume, dtype=float)
    r = np.asarray(revenue, dtype=float)
    if v.shape != r.shape or v.ndim != 1:
        raise ValueError("volume and revenue must be 1-d and equally long")
    if max_lag < 0:
        raise ValueError(f"max_lag must be >= 0, got {max_lag}")
    n = v.size
    if n < max_lag + 3:
        raise ValueError(
            f"series of length {n} too short for max_lag {max_lag}; "
            f"need at least {max_lag + 3}"
        )
    lags = list(range(max_lag + 1))
    correlations: list[Optional[float]] = []
    for lag in lags:
        x = v[lag:]
        y = r[: n - lag] if lag else r
        sx = x.std()
        sy = y.std()
        if sx == 0.0 or sy == 0.0:
            correlations.append(None)
            continue
        c = float(np.corrcoef(x, y)[0, 1])
        correlations.append(c)
    return LagCorrelationTable(lags=lags, correlations=correlations)


def calendar_week_series(dataset: Dataset,
                         max_week: int = 5) -> tuple[list[float], list[float]]:
    """Aggregate rating volume and revenue onto one calendar-week axis.

    Weeks are 7-day bins counted from the earliest release date across
    all items.  Volume is deduplicated rating events by posting date;
    revenue maps each item's week-t sales onto the calendar bin holding
    the start of that week.  Staggered release dates give the two
    series the overlap the lag correlation needs.
    """
    if not dataset.items:
        raise ValueError("dataset has no items")
    anchor = min(it.release_date for it in dataset.items)
    release = {it.item_id: it.release_date for it in dataset.items}

    def bin_of(day_offset: int) -> int:
        return day_offset // 7

    volume: dict[int, float] = {}
    for ev in dedupe_ratings(dataset.ratings):
        offset = (ev.timestamp.date() - anchor).days
        if offset < 0:
            continue
        b = bin_of(offset)
        volume[b] = volume.get(b, 0.0) + 1.0

    revenue: dict[int, float] = {}
    for s in dataset.sales:
        if not 1 <= s.week_index <= max_week:
            continue
        start = (release[s.item_id] - anchor).days + 7 * (s.week_index - 1)
        b = bin_of(start)
        revenue[b] = revenue.get(b, 0.0) + s.revenue

    last = max(list(volume) + list(revenue), default=-1)
    vol_series = [volume.get(b, 0.0) for b in range(last + 1)]
    rev_series = [revenue.get(b, 0.0) for b in range(last + 1)]
    return vol_series, rev_series


def _summary(values: Sequence[float]) -> VariableSummary:
    arr = np.asarray(values, dtype=float)
    sd = float(arr.std(ddof=1)) if arr.size > 1 else None
    return VariableSummary(
        mean=float(arr.mean()),
        sd=sd,
        minimum=float(arr.min()),
        maximum=float(arr.max()),
    )


def summary_stats(dataset: Dataset, panel: Sequence[PanelRow]) -> SummaryStats:
    """Mean/sd/min/max for the headline variables plus corpus totals.

    Weekly variables summarize over panel rows; budgets and opening
    screens over items; critic averages over items with any review.
    Rating totals count deduplicated events.
    """
    if not panel:
        raise ValueError("panel is empty")
    deduped = dedupe_ratings(dataset.ratings)

    out = SummaryStats()
    out.variables["marketing_budget_millions"] = _summary(
        [it.marketing_budget_millions for it in dataset.items]
    )
    opening = [s.screens for s in dataset.sales if s.week_index == 1]
    if opening:
        out.variables["opening_screens"] = _summary(opening)
    out.variables["weekly_revenue"] = _summary([r.revenue for r in panel])
    out.variables["weekly_volume"] = _summary([float(r.raters) for r in panel])
    out.variables["weekly_density_per_million"] = _summary(
        [r.density * PER_MILLION for r in panel]
    )
    out.variables["weekly_avg_user_rating"] = _summary(
        [r.avg_rating for r in panel]
    )
    critic_scores: dict[str, list[float]] = {}
    for rv in dataset.critics:
        critic_scores.setdefault(rv.item_id, []).append(rv.score)
    if critic_scores:
        out.variables["avg_critic_rating"] = _summary(
            [sum(v) / len(v) for v in critic_scores.values()]
        )

    out.totals["items"] = len(dataset.items)
    out.totals["user_ratings"] = len(deduped)
    out.totals["unique_users"] = len({ev.user_id for ev in deduped})
    out.totals["critic_ratings"] = len(dataset.critics)
    return out


def demographic_summary(
    profiles: Optional[Sequence[RaterProfile]],
    age_brackets: Sequence[tuple[int, int]] = ((18, 29),),
) -> DemographicSummary:
    """Coverage and composition of self-reported gender and age.

    Shares are taken over profiles that report the field, not over all
    profiles; both breakdowns are None when nobody reports the field.
    """
    profiles = list(profiles or [])
    total = len(profiles)
    with_gender = [p for p in profiles if p.gender is not None]
    with_age = [p for p in profiles if p.age is not None]
    gender_cov = len(with_gender) / total if total else 0.0
    age_cov = len(with_age) / total if total else 0.0

    gender_shares: Optional[dict[str, float]] = None
    if with_gender:
        gender_shares = {}
        for g in ("male", "female"):
            gender_shares[g] = sum(
                1 for p in with_gender if p.gender == g
            ) / len(with_gender)

    age_shares: Optional[dict[str, float]] = None
    if with_age:
        age_shares = {}
        covered = 0
        for lo, hi in age_brackets:
            label = f"{lo}-{hi}"
            count = sum(1 for p in with_age if lo <= p.age <= hi)
            age_shares[label] = count / len(with_age)
            covered += count
        age_shares["other"] = (len(with_age) - covered) / len(with_age)

    return DemographicSummary(
        total_profiles=total,
        gender_coverage=gender_cov,
        age_coverage=age_cov,
        gender_shares=gender_shares,
        age_bracket_shares=age_shares,
    )
