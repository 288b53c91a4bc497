"""Input files, validation, deduplication, and panel construction.

Five delimited files describe a release window: user rating events,
critic reviews, item descriptions, weekly sales, and optional rater
profiles.  This module parses and validates them, collapses repeat
ratings, buckets events into weeks since release, and assembles the
item-week panel consumed by the metrics and regression layers.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Iterable, Optional, Sequence

log = logging.getLogger(__name__)

SCORE_MIN = 1
SCORE_MAX = 5

RATINGS_COLUMNS = ("user_id", "item_id", "timestamp", "score", "text")
ITEMS_COLUMNS = (
    "item_id",
    "title",
    "release_date",
    "genres",
    "marketing_budget_millions",
)
SALES_COLUMNS = ("item_id", "week_index", "revenue", "screens")
CRITICS_COLUMNS = ("item_id", "critic_id", "score")
PROFILES_COLUMNS = ("user_id", "gender", "age")


def logit(p: float) -> float:
    """ln(p / (1 - p)); defined on the open unit interval."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"logit needs 0 < p < 1, got {p}")
    return math.log(p / (1.0 - p))


def inverse_logit(x: float) -> float:
    """Logistic function, the inverse of ``logit``."""
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


class DatasetError(ValueError):
    """Raised when input files are malformed or mutually inconsistent.

    ``problems`` lists every diagnostic found, each prefixed with the
    file name and line number where applicable.
    """

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        preview = "\n  ".join(self.problems[:20])
        more = len(self.problems) - 20
        if more > 0:
            preview += f"\n  ... and {more} more"
        super().__init__(f"{len(self.problems)} problem(s) found:\n  {preview}")


@dataclass
class RatingEvent:
    user_id: str
    item_id: str
    timestamp: datetime
    score: int
    text: Optional[str] = None


@dataclass
class CriticReview:
    item_id: str
    critic_id: str
    score: float


@dataclass
class ItemRecord:
    item_id: str
    title: str
    release_date: date
    genres: tuple[str, ...]
    marketing_budget_millions: float


@dataclass
class WeeklySales:
    item_id: str
    week_index: int
    revenue: float
    screens: int


@dataclass
class RaterProfile:
    user_id: str
    gender: Optional[str] = None
    age: Optional[int] = None


@dataclass
class Dataset:
    """All parsed inputs plus the constant ticket price."""

    ratings: list[RatingEvent]
    critics: list[CriticReview]
    items: list[ItemRecord]
    sales: list[WeeklySales]
    profiles: Optional[list[RaterProfile]]
    ticket_price: float


@dataclass
class WeekBuckets:
    """Rating events grouped by (item, week since release).

    Week 1 covers days 0..6 after the release date, week 2 days 7..13,
    and so on.  Events stamped before release or past the horizon are
    counted, not kept.
    """

    buckets: dict[tuple[str, int], list[RatingEvent]]
    pre_release: int
    beyond_horizon: int


@dataclass
class PanelRow:
    """One item-week observation ready for the regression design."""

    item_id: str
    week_index: int
    raters: int
    viewers: float
    density: float
    ld: float
    avg_rating: float
    mkt: float
    scr: float
    crstd: float
    genre_weights: dict[str, float]
    lweek: float
    revenue: float


@dataclass
class PanelExclusions:
    """Counts of observations dropped on the way to the panel."""

    pre_release: int = 0
    beyond_horizon: int = 0
    zero_ratings: int = 0
    zero_revenue: int = 0
    density_not_below_one: int = 0
    insufficient_critics: int = 0
    missing_sales: int = 0

    def total(self) -> int:
        return (
            self.pre_release
            + self.beyond_horizon
            + self.zero_ratings
            + self.zero_revenue
            + self.density_not_below_one
            + self.insufficient_critics
            + self.missing_sales
        )


@dataclass
class PanelResult:
    rows: list[PanelRow]
    exclusions: PanelExclusions


def _parse_timestamp(raw: str) -> datetime:
    text = raw.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def _check_header(reader: csv.DictReader, required: Sequence[str], name: str,
                  problems: list[str]) -> bool:
    have = reader.fieldnames or []
    missing = [c for c in required if c not in have]
    if missing:
        problems.append(f"{name}: missing column(s) {', '.join(missing)}")
        return False
    return True


def _open_csv(path: Path, problems: list[str]):
    try:
        return open(path, newline="", encoding="utf-8")
    except OSError as exc:
        problems.append(f"{path}: cannot open ({exc})")
        return None


def parse_ratings(path: Path | str, problems: list[str]) -> list[RatingEvent]:
    path = Path(path)
    events: list[RatingEvent] = []
    handle = _open_csv(path, problems)
    if handle is None:
        return events
    with handle:
        reader = csv.DictReader(handle)
        if not _check_header(reader, RATINGS_COLUMNS[:4], path.name, problems):
            return events
        for row in reader:
            line = reader.line_num
            user = (row.get("user_id") or "").strip()
            item = (row.get("item_id") or "").strip()
            if not user or not item:
                problems.append(f"{path.name} line {line}: empty user_id or item_id")
                continue
            try:
                ts = _parse_timestamp(row.get("timestamp") or "")
            except ValueError:
                problems.append(
                    f"{path.name} line {line}: bad timestamp {row.get('timestamp')!r}"
                )
                continue
            raw_score = (row.get("score") or "").strip()
            try:
                score = int(raw_score)
            except ValueError:
                problems.append(f"{path.name} line {line}: bad score {raw_score!r}")
                continue
            if not SCORE_MIN <= score <= SCORE_MAX:
                problems.append(
                    f"{path.name} line {line}: score {score} outside "
                    f"[{SCORE_MIN}, {SCORE_MAX}]"
                )
                continue
            text = row.get("text")
            events.append(RatingEvent(user, item, ts, score, text or None))
    return events


def parse_items(path: Path | str, problems: list[str]) -> list[ItemRecord]:
    path = Path(path)
    items: list[ItemRecord] = []
    seen: set[str] = set()
    handle = _open_csv(path, problems)
    if handle is None:
        return items
    with handle:
        reader = csv.DictReader(handle)
        if not _check_header(reader, ITEMS_COLUMNS, path.name, problems):
            return items
        for row in reader:
            line = reader.line_num
            item = (row.get("item_id") or "").strip()
            if not item:
                problems.append(f"{path.name} line {line}: empty item_id")
                continue
            if item in seen:
                problems.append(f"{path.name} line {line}: duplicate item_id {item!r}")
                continue
            try:
                release = date.fromisoformat((row.get("release_date") or "").strip())
            except ValueError:
                problems.append(
                    f"{path.name} line {line}: bad release_date "
                    f"{row.get('release_date')!r}"
                )
                continue
            genres = tuple(
                g.strip().upper()
                for g in (row.get("genres") or "").split(";")
                if g.strip()
            )
            if not genres:
                problems.append(f"{path.name} line {line}: no genres listed")
                continue
            try:
                budget = float((row.get("marketing_budget_millions") or "").strip())
            except ValueError:
                problems.append(
                    f"{path.name} line {line}: bad marketing_budget_millions "
                    f"{row.get('marketing_budget_millions')!r}"
                )
                continue
            if not math.isfinite(budget) or budget < 0:
                problems.append(
                    f"{path.name} line {line}: marketing budget must be "
                    f"finite and >= 0, got {budget}"
                )
                continue
            seen.add(item)
            items.append(
                ItemRecord(item, (row.get("title") or "").strip(), release,
                           genres, budget)
            )
    return items


def parse_sales(path: Path | str, problems: list[str]) -> list[WeeklySales]:
    path = Path(path)
    sales: list[WeeklySales] = []
    seen: set[tuple[str, int]] = set()
    handle = _open_csv(path, problems)
    if handle is None:
        return sales
    with handle:
        reader = csv.DictReader(handle)
        if not _check_header(reader, SALES_COLUMNS, path.name, problems):
            return sales
        for row in reader:
            line = reader.line_num
            item = (row.get("item_id") or "").strip()
            if not item:
                problems.append(f"{path.name} line {line}: empty item_id")
                continue
            try:
                week = int((row.get("week_index") or "").strip())
                revenue = float((row.get("revenue") or "").strip())
                screens = int((row.get("screens") or "").strip())
            except ValueError:
                problems.append(f"{path.name} line {line}: non-numeric field")
                continue
            if week < 1:
                problems.append(f"{path.name} line {line}: week_index {week} < 1")
                continue
            if not math.isfinite(revenue) or revenue < 0:
                problems.append(
                    f"{path.name} line {line}: revenue must be finite and >= 0"
                )
                continue
            if screens < 0:
                problems.append(f"{path.name} line {line}: screens {screens} < 0")
                continue
            key = (item, week)
            if key in seen:
                problems.append(
                    f"{path.name} line {line}: duplicate sales row for "
                    f"item {item!r} week {week}"
                )
                continue
            seen.add(key)
            sales.append(WeeklySales(item, week, revenue, screens))
    return sales


def parse_critics(path: Path | str, problems: list[str]) -> list[CriticReview]:
    path = Path(path)
    reviews: list[CriticReview] = []
    handle = _open_csv(path, problems)
    if handle is None:
        return reviews
    with handle:
        reader = csv.DictReader(handle)
        if not _check_header(reader, CRITICS_COLUMNS, path.name, problems):
            return reviews
        for row in reader:
            line = reader.line_num
            item = (row.get("item_id") or "").strip()
            critic = (row.get("critic_id") or "").strip()
            if not item or not critic:
                problems.append(f"{path.name} line {line}: empty item_id or critic_id")
                continue
            try:
                score = float((row.get("score") or "").strip())
            except ValueError:
                problems.append(f"{path.name} line {line}: bad score")
                continue
            if not SCORE_MIN <= score <= SCORE_MAX:
                problems.append(
                    f"{path.name} line {line}: critic score {score} outside "
                    f"[{SCORE_MIN}, {SCORE_MAX}]"
                )
                continue
            reviews.append(CriticReview(item, critic, score))
    return reviews


def parse_profiles(path: Path | str, problems: list[str]) -> list[RaterProfile]:
    path = Path(path)
    profiles: list[RaterProfile] = []
    seen: set[str] = set()
    handle = _open_csv(path, problems)
    if handle is None:
        return profiles
    with handle:
        reader = csv.DictReader(handle)
        if not _check_header(reader, PROFILES_COLUMNS, path.name, problems):
            return profiles
        for row in reader:
            line = reader.line_num
            user = (row.get("user_id") or "").strip()
            if not user:
                problems.append(f"{path.name} line {line}: empty user_id")
                continue
            if user in seen:
                problems.append(f"{path.name} line {line}: duplicate user_id {user!r}")
                continue
            gender_raw = (row.get("gender") or "").strip().lower()
            gender: Optional[str]
            if not gender_raw:
                gender = None
            elif gender_raw in ("male", "female"):
                gender = gender_raw
            else:
                problems.append(
                    f"{path.name} line {line}: gender must be male, female, "
                    f"or empty, got {gender_raw!r}"
                )
                continue
            age_raw = (row.get("age") or "").strip()
            age: Optional[int]
            if not age_raw:
                age = None
            else:
                try:
                    age = int(age_raw)
                except ValueError:
                    problems.append(f"{path.name} line {line}: bad age {age_raw!r}")
                    continue
                if not 1 <= age <= 120:
                    problems.append(
                        f"{path.name} line {line}: age {age} outside [1, 120]"
                    )
                    continue
            seen.add(user)
            profiles.append(RaterProfile(user, gender, age))
    return profiles


def validate_dataset(dataset: Dataset) -> None:
    """Cross-file consistency checks; raises DatasetError on failure."""
    problems: list[str] = []
    if not (math.isfinite(dataset.ticket_price) and dataset.ticket_price > 0):
        problems.append(f"ticket price must be > 0, got {dataset.ticket_price}")
    known = {it.item_id for it in dataset.items}
    for ev in dataset.ratings:
        if ev.item_id not in known:
            problems.append(f"rating references unknown item {ev.item_id!r}")
    for rv in dataset.critics:
        if rv.item_id not in known:
            problems.append(f"critic review references unknown item {rv.item_id!r}")
    for s in dataset.sales:
        if s.item_id not in known:
            problems.append(f"sales row references unknown item {s.item_id!r}")
    seen_sales: set[tuple[str, int]] = set()
    for s in dataset.sales:
        key = (s.item_id, s.week_index)
        if key in seen_sales:
            problems.append(f"duplicate sales row for item {key[0]!r} week {key[1]}")
        seen_sales.add(key)
    if problems:
        raise DatasetError(problems)


def parse_dataset(
    ratings_path: Path | str,
    items_path: Path | str,
    sales_path: Path | str,
    critics_path: Path | str,
    profiles_path: Optional[Path | str] = None,
    *,
    ticket_price: float,
) -> Dataset:
    """Parse and cross-validate all input files.

    Collects every problem across all files before raising, so a single
    run reports everything wrong with a delivery.
    """
    problems: list[str] = []
    ratings = parse_ratings(ratings_path, problems)
    items = parse_items(items_path, problems)
    sales = parse_sales(sales_path, problems)
    critics = parse_critics(critics_path, problems)
    profiles = None
    if profiles_path is not None:
        profiles = parse_profiles(profiles_path, problems)
    if problems:
        raise DatasetError(problems)
    dataset = Dataset(ratings, critics, items, sales, profiles, float(ticket_price))
    validate_dataset(dataset)
    return dataset


def _event_sort_key(ev: RatingEvent):
    return (ev.timestamp, ev.score, ev.text or "")


def dedupe_ratings(events: Iterable[RatingEvent]) -> list[RatingEvent]:
    """Keep one event per (user, item): the earliest by timestamp.

    Exact timestamp ties fall back to the lowest score, then text, so
    the survivor never depends on input order.  Output is sorted by
    (item, user); applying the function twice changes nothing.
    """
    best: dict[tuple[str, str], RatingEvent] = {}
    for ev in events:
        key = (ev.user_id, ev.item_id)
        kept = best.get(key)
        if kept is None or _event_sort_key(ev) < _event_sort_key(kept):
            best[key] = ev
    return sorted(best.values(), key=lambda e: (e.item_id, e.user_id))


def bucket_weeks(
    events: Iterable[RatingEvent],
    items: Iterable[ItemRecord],
    max_week: int = 5,
    period_days: int = 7,
) -> WeekBuckets:
    """Assign events to periods counted from each item's release date.

    ``period_days`` defaults to calendar weeks; day 0 through day 6
    after release form week 1.  Events before release or beyond
    ``max_week`` periods are tallied and dropped.
    """
    if max_week < 1:
        raise ValueError(f"max_week must be >= 1, got {max_week}")
    if period_days < 1:
        raise ValueError(f"period_days must be >= 1, got {period_days}")
    release = {it.item_id: it.release_date for it in items}
    buckets: dict[tuple[str, int], list[RatingEvent]] = {}
    pre = beyond = 0
    for ev in events:
        rel = release.get(ev.item_id)
        if rel is None:
            raise DatasetError([f"rating references unknown item {ev.item_id!r}"])
        days = (ev.timestamp.date() - rel).days
        if days < 0:
            pre += 1
            continue
        week = days // period_days + 1
        if week > max_week:
            beyond += 1
            continue
        buckets.setdefault((ev.item_id, week), []).append(ev)
    return WeekBuckets(buckets=buckets, pre_release=pre, beyond_horizon=beyond)


def critic_score_sd(reviews: Iterable[CriticReview]) -> dict[str, float]:
    """Per-item sample standard deviation of critic scores.

    Items with fewer than two reviews are omitted; dispersion is
    undefined there.
    """
    by_item: dict[str, list[float]] = {}
    for rv in reviews:
        by_item.setdefault(rv.item_id, []).append(rv.score)
    out: dict[str, float] = {}
    for item, scores in by_item.items():
        n = len(scores)
        if n < 2:
            continue
        mean = sum(scores) / n
        var = sum((s - mean) ** 2 for s in scores) / (n - 1)
        out[item] = math.sqrt(var)
    return out


def build_panel(dataset: Dataset, max_week: int = 5) -> PanelResult:
    """Assemble item-week observations for the density regression.

    Density is unique raters times ticket price over revenue.  An
    item-week only yields a row when it has sales, at least one rating,
    positive revenue, density below one, and an item-level critic-score
    dispersion; every drop is counted by reason in the exclusions.
    """
    deduped = dedupe_ratings(dataset.ratings)
    weeks = bucket_weeks(deduped, dataset.items, max_week=max_week)
    crstd = critic_score_sd(dataset.critics)
    items = {it.item_id: it for it in dataset.items}
    price = dataset.ticket_price

    excl = PanelExclusions(
        pre_release=weeks.pre_release, beyond_horizon=weeks.beyond_horizon
    )

    sales_by_key = {
        (s.item_id, s.week_index): s
        for s in dataset.sales
        if 1 <= s.week_index <= max_week
    }
    for key in weeks.buckets:
        if key not in sales_by_key:
            excl.missing_sales += 1
            log.warning("no sales row for item %s week %d; %d rating(s) unused",
                        key[0], key[1], len(weeks.buckets[key]))

    rows: list[PanelRow] = []
    for (item_id, week), sale in sorted(sales_by_key.items()):
        events = weeks.buckets.get((item_id, week))
        if not events:
            excl.zero_ratings += 1
            continue
        if sale.revenue <= 0:
            excl.zero_revenue += 1
            continue
        item = items[item_id]
        raters = len({ev.user_id for ev in events})
        density = raters * price / sale.revenue
        if density >= 1.0:
            excl.density_not_below_one += 1
            log.warning(
                "item %s week %d: density %.3f >= 1, row excluded",
                item_id, week, density,
            )
            continue
        sd = crstd.get(item_id)
        if sd is None:
            excl.insufficient_critics += 1
            continue
        avg = sum(ev.score for ev in events) / len(events)
        k = len(item.genres)
        weights = {g: 1.0 / k for g in item.genres}
        rows.append(
            PanelRow(
                item_id=item_id,
                week_index=week,
                raters=raters,
                viewers=sale.revenue / price,
                density=density,
                ld=logit(density),
                avg_rating=avg,
                mkt=item.marketing_budget_millions,
                scr=float(sale.screens),
                crstd=sd,
                genre_weights=weights,
                lweek=math.log(week),
                revenue=sale.revenue,
            )
        )
    return PanelResult(rows=rows, exclusions=excl)


def _format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def write_dataset(dataset: Dataset, directory: Path | str) -> dict[str, Path]:
    """Write all dataset files into a directory; returns the paths.

    Output parses back into an equivalent dataset through
    ``parse_dataset``.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}

    path = directory / "ratings.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RATINGS_COLUMNS)
        for ev in dataset.ratings:
            writer.writerow(
                [ev.user_id, ev.item_id, _format_timestamp(ev.timestamp),
                 ev.score, ev.text or ""]
            )
    paths["ratings"] = path

    path = directory / "items.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ITEMS_COLUMNS)
        for it in dataset.items:
            writer.writerow(
                [it.item_id, it.title, it.release_date.isoformat(),
                 ";".join(it.genres), repr(it.marketing_budget_millions)]
            )
    paths["items"] = path

    path = directory / "sales.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SALES_COLUMNS)
        for s in dataset.sales:
            writer.writerow([s.item_id, s.week_index, repr(s.revenue), s.screens])
    paths["sales"] = path

    path = directory / "critics.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CRITICS_COLUMNS)
        for rv in dataset.critics:
            writer.writerow([rv.item_id, rv.critic_id, repr(rv.score)])
    paths["critics"] = path

    if dataset.profiles is not None:
        path = directory / "profiles.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(PROFILES_COLUMNS)
            for pr in dataset.profiles:
                writer.writerow(
                    [pr.user_id, pr.gender or "",
                     pr.age if pr.age is not None else ""]
                )
        paths["profiles"] = path

    return paths
