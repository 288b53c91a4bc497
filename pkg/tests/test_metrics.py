"""Unit tests for descriptive statistics and rankings."""

import math
from datetime import date, datetime, timezone

import pytest

from womdensity.dataset import (
    CriticReview,
    Dataset,
    ItemRecord,
    RaterProfile,
    RatingEvent,
    WeeklySales,
    build_panel,
)
from womdensity.metrics import (
    PER_MILLION,
    calendar_week_series,
    demographic_summary,
    first_week_density_ecdf,
    lag_correlation,
    rank_by_density,
    score_histogram,
    summary_stats,
)


def ts(day, hour=12):
    return datetime(2024, 3, day, hour, tzinfo=timezone.utc)


def build_corpus(n_items=3):
    items, ratings, critics, sales = [], [], [], []
    for i in range(n_items):
        iid = f"m{i}"
        items.append(ItemRecord(iid, f"Title {i}", date(2024, 3, 1),
                                ("DRAMA",), 10.0 + i))
        critics.append(CriticReview(iid, "c1", 2.0))
        critics.append(CriticReview(iid, "c2", 4.0))
        for w in (1, 2):
            sales.append(WeeklySales(iid, w, 100_000.0 * (i + 1) / w, 1000 + i))
        for u in range(2 + i):
            ratings.append(RatingEvent(f"u{i}_{u}", iid, ts(1 + (u % 3)),
                                       1 + (u % 5), None))
    return Dataset(ratings=ratings, critics=critics, items=items,
                   sales=sales, profiles=[], ticket_price=8.0)


class TestScoreHistogram:
    def test_counts_and_fractions(self):
        events = [RatingEvent("u1", "m1", ts(1), 5, None),
                  RatingEvent("u2", "m1", ts(1), 5, None),
                  RatingEvent("u3", "m1", ts(1), 1, None),
                  RatingEvent("u4", "m1", ts(1), 3, None)]
        hist = score_histogram(events)
        assert hist.total == 4
        assert hist.counts == {1: 1, 2: 0, 3: 1, 4: 0, 5: 2}
        assert hist.fractions[5] == pytest.approx(0.5)
        assert sum(hist.fractions.values()) == pytest.approx(1.0)

    def test_empty(self):
        hist = score_histogram([])
        assert hist.total == 0
        assert hist.counts == {s: 0 for s in range(1, 6)}
        assert hist.fractions is None


class TestEcdf:
    def test_points_and_final_probability(self):
        panel = build_panel(build_corpus()).rows
        week1 = sorted(r.density * PER_MILLION for r in panel if r.week_index == 1)
        ecdf = first_week_density_ecdf(panel)
        values = [v for v, _ in ecdf]
        probs = [p for _, p in ecdf]
        assert values == sorted(set(week1))
        assert probs[-1] == pytest.approx(1.0)
        assert all(b > a for a, b in zip(probs, probs[1:]))

    def test_duplicates_merged(self):
        panel = build_panel(build_corpus()).rows
        week1 = [r for r in panel if r.week_index == 1]
        clones = []
        for r in week1:
            clones.append(r)
        # duplicate every density value once
        doubled = week1 + clones
        ecdf = first_week_density_ecdf(doubled)
        values = [v for v, _ in ecdf]
        assert len(values) == len(set(values))
        assert ecdf[-1][1] == pytest.approx(1.0)

    def test_requires_week_one(self):
        panel = [r for r in build_panel(build_corpus()).rows if r.week_index != 1]
        with pytest.raises(ValueError):
            first_week_density_ecdf(panel)


class TestRanking:
    def test_orders_by_first_week_density(self):
        ds = build_corpus(4)
        panel = build_panel(ds).rows
        ranking = rank_by_density(panel, ds, k=2)
        week1 = {r.item_id: r.density * PER_MILLION
                 for r in panel if r.week_index == 1}
        ordered = sorted(week1, key=lambda i: (-week1[i], i))
        assert [e.item_id for e in ranking.top] == ordered[:2]
        assert [e.item_id for e in ranking.bottom] == ordered[-2:]
        assert not ranking.capped
        assert ranking.top[0].title == "Title 0"

    def test_small_panel_caps_k(self):
        ds = build_corpus(2)
        panel = build_panel(ds).rows
        ranking = rank_by_density(panel, ds, k=5)
        assert ranking.capped
        assert len(ranking.top) == 2

    def test_k_must_be_positive(self):
        ds = build_corpus(2)
        panel = build_panel(ds).rows
        with pytest.raises(ValueError):
            rank_by_density(panel, ds, k=0)


class TestLagCorrelation:
    def test_perfect_shift(self):
        revenue = [10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0]
        volume = [0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0]
        table = lag_correlation(volume, revenue, max_lag=2)
        assert list(table.lags) == [0, 1, 2]
        # volume lags revenue by one step, so lag 1 aligns them exactly
        assert table.correlations[1] == pytest.approx(1.0)

    def test_constant_series_is_none(self):
        table = lag_correlation([1.0] * 8, [1.0, 2, 3, 4, 5, 6, 7, 8], max_lag=1)
        assert table.correlations[0] is None

    def test_short_series_rejected(self):
        with pytest.raises(ValueError):
            lag_correlation([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], max_lag=3)

    def test_matches_manual_pearson(self):
        volume = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0]
        revenue = [2.0, 7.0, 1.0, 8.0, 2.0, 8.0, 1.0]
        table = lag_correlation(volume, revenue, max_lag=1)
        x = volume[1:]
        y = revenue[:-1]
        mx = sum(x) / len(x)
        my = sum(y) / len(y)
        num = sum((a - mx) * (b - my) for a, b in zip(x, y))
        den = math.sqrt(sum((a - mx) ** 2 for a in x) *
                        sum((b - my) ** 2 for b in y))
        assert table.correlations[1] == pytest.approx(num / den)


class TestCalendarSeries:
    def test_bins_anchor_at_first_release(self):
        ds = build_corpus(2)
        volume, revenue = calendar_week_series(ds, max_week=2)
        # all items share a release date, so calendar weeks mirror item weeks
        assert len(volume) == len(revenue)
        release = datetime(2024, 3, 1, tzinfo=timezone.utc)
        assert volume[0] == sum(
            1 for r in ds.ratings if (r.timestamp - release).days < 7
        )
        expected_week1 = sum(s.revenue for s in ds.sales if s.week_index == 1)
        assert revenue[0] == pytest.approx(expected_week1)


class TestSummaryStats:
    def test_fields_present_and_sane(self):
        ds = build_corpus()
        panel = build_panel(ds).rows
        stats = summary_stats(ds, panel)
        names = set(stats.variables)
        assert {"marketing_budget_millions", "opening_screens",
                "weekly_revenue", "weekly_volume",
                "weekly_density_per_million", "weekly_avg_user_rating",
                "avg_critic_rating"} <= names
        v = stats.variables["marketing_budget_millions"]
        assert v.minimum == 10.0
        assert v.maximum == 12.0
        assert v.mean == pytest.approx(11.0)
        assert stats.totals["items"] == 3
        assert stats.totals["unique_users"] == len(
            {r.user_id for r in ds.ratings}
        )

    def test_single_observation_sd_is_none(self):
        ds = build_corpus(1)
        panel = build_panel(ds).rows
        stats = summary_stats(ds, panel)
        assert stats.variables["marketing_budget_millions"].sd is None

    def test_empty_panel_rejected(self):
        ds = build_corpus()
        with pytest.raises(ValueError):
            summary_stats(ds, [])


class TestDemographics:
    def test_coverage_and_shares(self):
        profiles = [
            RaterProfile("u1", "male", 25),
            RaterProfile("u2", "female", 40),
            RaterProfile("u3", None, 19),
            RaterProfile("u4", "male", None),
        ]
        summary = demographic_summary(profiles)
        assert summary.total_profiles == 4
        assert summary.gender_coverage == pytest.approx(0.75)
        assert summary.age_coverage == pytest.approx(0.75)
        assert summary.gender_shares["male"] == pytest.approx(2 / 3)
        assert summary.age_bracket_shares["18-29"] == pytest.approx(2 / 3)
        assert summary.age_bracket_shares["other"] == pytest.approx(1 / 3)

    def test_empty_profiles(self):
        summary = demographic_summary([])
        assert summary.total_profiles == 0
        assert summary.gender_coverage == 0.0
        assert summary.gender_shares is None
