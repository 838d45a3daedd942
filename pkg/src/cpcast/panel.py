"""Advertiser panel data model: ingestion, cleaning, derived features.

A panel is a set of advertisers sharing one global daily date range. Raw
channels are daily ad cost, clicks, and impressions; cleaning interpolates
gaps, derives cost-per-click and its 7-day lag, and builds the monthly
budget proxy (realized monthly ad cost written to every day of the month).

Missing values are NaN throughout. Dates are timezone-free calendar days
stored as ``datetime64[D]``; day-of-week uses Monday = 0.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np

# First week of cpc has no 7-day lag; those days are warm-up and are never
# used as training targets downstream.
WARMUP_DAYS = 7

RAW_CHANNELS = ("adcost", "adclicks", "impressions")
CSV_HEADER = ("advertiser_id", "date", "category", "adcost", "adclicks", "impressions")


class ParseError(ValueError):
    """Malformed ingestion input, positioned at the offending row."""


@dataclass
class AdvertiserSeries:
    """One advertiser's aligned daily series over the panel date range."""

    advertiser_id: str
    category: str
    dates: np.ndarray
    adcost: np.ndarray
    adclicks: np.ndarray
    impressions: np.ndarray
    cpc: np.ndarray | None = None
    adbudget: np.ndarray | None = None
    lag7_cpc: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.dates)
        for name in ("adcost", "adclicks", "impressions", "cpc", "adbudget", "lag7_cpc"):
            arr = getattr(self, name)
            if arr is not None and len(arr) != n:
                raise ValueError(f"{self.advertiser_id}: channel {name} length {len(arr)} != {n} dates")
        if n > 1:
            deltas = np.diff(self.dates.astype("datetime64[D]").astype(np.int64))
            if not np.all(deltas == 1):
                raise ValueError(f"{self.advertiser_id}: dates are not consecutive calendar days")

    def missing_fraction(self) -> float:
        """Fraction of days with any raw channel missing."""
        missing = np.zeros(len(self.dates), dtype=bool)
        for name in RAW_CHANNELS:
            missing |= np.isnan(getattr(self, name))
        return float(missing.mean())


@dataclass
class CalendarFrame:
    """Per-day calendar features derived purely from the date index."""

    dates: np.ndarray
    dow: np.ndarray
    doy: np.ndarray
    month: np.ndarray

    @classmethod
    def from_dates(cls, dates: np.ndarray) -> "CalendarFrame":
        d = dates.astype("datetime64[D]")
        # 1970-01-01 is a Thursday; +3 puts Monday at 0
        dow = ((d.astype(np.int64) + 3) % 7).astype(np.int64)
        doy = (d - d.astype("datetime64[Y]").astype("datetime64[D]")).astype(np.int64) + 1
        month = (d.astype("datetime64[M]") - d.astype("datetime64[Y]").astype("datetime64[M]")).astype(np.int64) + 1
        return cls(dates=d, dow=dow, doy=doy, month=month)


@dataclass
class PanelDataset:
    """Advertiser series sharing one global date range plus calendar features."""

    advertisers: dict[str, AdvertiserSeries]
    calendar: CalendarFrame = field(default=None)
    categories: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.advertisers:
            raise ValueError("panel has no advertisers")
        ranges = {(s.dates[0], s.dates[-1], len(s.dates)) for s in self.advertisers.values()}
        if len(ranges) != 1:
            raise ValueError("advertisers do not span an identical date range")
        first = next(iter(self.advertisers.values()))
        if self.calendar is None:
            self.calendar = CalendarFrame.from_dates(first.dates)
        if not self.categories:
            self.categories = tuple(sorted({s.category for s in self.advertisers.values()}))

    @property
    def dates(self) -> np.ndarray:
        return next(iter(self.advertisers.values())).dates

    @property
    def n_days(self) -> int:
        return len(self.dates)

    def ids(self) -> list[str]:
        return list(self.advertisers.keys())

    def __getitem__(self, advertiser_id: str) -> AdvertiserSeries:
        return self.advertisers[advertiser_id]


# ---------------------------------------------------------------------------
# ingestion
# ---------------------------------------------------------------------------

def _parse_number(text: str, column: str, row_num: int) -> float:
    text = text.strip()
    if text == "":
        return np.nan
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"row {row_num}: column {column!r} is not a number: {text!r}") from None
    if value < 0:
        raise ParseError(f"row {row_num}: column {column!r} is negative: {value}")
    return value


def _parse_date(text: str, row_num: int) -> np.datetime64:
    try:
        d = np.datetime64(text.strip(), "D")
    except ValueError:
        raise ParseError(f"row {row_num}: invalid ISO-8601 date {text!r}") from None
    # numpy accepts out-of-range month/day in some forms; round-trip to be strict
    if str(d) != text.strip():
        raise ParseError(f"row {row_num}: invalid ISO-8601 date {text!r}")
    return d


def ingest_csv(source) -> PanelDataset:
    """Build a panel from CSV rows of per-(advertiser, day) metrics.

    ``source`` may be a path, a text stream, or a byte stream. The global
    date range is the union of every advertiser's range; days an advertiser
    does not cover are inserted as missing-valued rows.
    """
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return ingest_csv(fh)
    if isinstance(source, bytes):
        return ingest_csv(io.StringIO(source.decode("utf-8")))
    if hasattr(source, "read") and isinstance(source.read(0), bytes):
        source = io.TextIOWrapper(source, encoding="utf-8")

    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty input") from None
    header = [h.strip() for h in header]
    if header != list(CSV_HEADER):
        raise ParseError(f"unexpected header {header!r}, want {list(CSV_HEADER)!r}")

    rows: dict[str, dict[np.datetime64, tuple]] = {}
    category_of: dict[str, str] = {}
    for row_num, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and row[0].strip() == ""):
            continue
        if len(row) != len(CSV_HEADER):
            raise ParseError(f"row {row_num}: expected {len(CSV_HEADER)} columns, got {len(row)}")
        aid = row[0].strip()
        if not aid:
            raise ParseError(f"row {row_num}: empty advertiser_id")
        date = _parse_date(row[1], row_num)
        category = row[2].strip()
        values = tuple(_parse_number(row[3 + i], CSV_HEADER[3 + i], row_num) for i in range(3))
        per_id = rows.setdefault(aid, {})
        if date in per_id:
            raise ParseError(f"row {row_num}: duplicate (advertiser_id, date) = ({aid}, {date})")
        per_id[date] = values
        prev_cat = category_of.setdefault(aid, category)
        if prev_cat != category:
            raise ParseError(f"row {row_num}: advertiser {aid} has conflicting categories "
                             f"{prev_cat!r} and {category!r}")

    if not rows:
        raise ParseError("no data rows")

    all_dates = [d for per_id in rows.values() for d in per_id]
    start, end = min(all_dates), max(all_dates)
    dates = np.arange(start, end + np.timedelta64(1, "D"), dtype="datetime64[D]")
    index_of = {d: i for i, d in enumerate(dates)}

    advertisers: dict[str, AdvertiserSeries] = {}
    for aid in sorted(rows):
        chans = {name: np.full(len(dates), np.nan) for name in RAW_CHANNELS}
        for date, values in rows[aid].items():
            i = index_of[date]
            for name, v in zip(RAW_CHANNELS, values):
                chans[name][i] = v
        advertisers[aid] = AdvertiserSeries(
            advertiser_id=aid, category=category_of[aid], dates=dates, **chans)

    return PanelDataset(advertisers=advertisers)


def write_csv(panel: PanelDataset, dest) -> None:
    """Emit the panel in the ingestion CSV schema (NaN cells left empty)."""
    if isinstance(dest, str):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            write_csv(panel, fh)
            return
    writer = csv.writer(dest)
    writer.writerow(CSV_HEADER)
    for aid, s in panel.advertisers.items():
        for i, d in enumerate(s.dates):
            cells = [aid, str(d), s.category]
            for name in RAW_CHANNELS:
                v = getattr(s, name)[i]
                cells.append("" if np.isnan(v) else repr(float(v)))
            writer.writerow(cells)


# ---------------------------------------------------------------------------
# cleaning and derived features
# ---------------------------------------------------------------------------

def filter_missing(panel: PanelDataset, max_missing_frac: float = 0.01) -> PanelDataset:
    """Drop advertisers whose raw-channel missing fraction exceeds the threshold.

    Fractions are measured over the global range before any interpolation.
    """
    kept = {aid: s for aid, s in panel.advertisers.items()
            if s.missing_fraction() <= max_missing_frac}
    if not kept:
        raise ValueError(f"no advertisers survive max_missing_frac={max_missing_frac}")
    return PanelDataset(advertisers=kept)


def _interpolate_channel(values: np.ndarray, name: str, advertiser_id: str) -> np.ndarray:
    observed = ~np.isnan(values)
    if not observed.any():
        raise ValueError(f"{advertiser_id}: channel {name!r} is entirely missing")
    if observed.all():
        return values.copy()
    idx = np.arange(len(values), dtype=np.float64)
    # np.interp draws straight lines between neighbors and extends the
    # nearest observed value past the boundaries
    return np.interp(idx, idx[observed], values[observed])


def interpolate_linear(series: AdvertiserSeries) -> AdvertiserSeries:
    """Fill every raw-channel gap with the line between its nearest neighbors."""
    filled = {name: _interpolate_channel(getattr(series, name), name, series.advertiser_id)
              for name in RAW_CHANNELS}
    return replace(series, **filled)


def derive_cpc(series: AdvertiserSeries) -> AdvertiserSeries:
    """Derive cpc = adcost / adclicks and its 7-day lag.

    Zero-click days give an undefined ratio; they are marked missing and
    re-filled by linear interpolation so the target stays finite. The lag
    series extends the first observed cpc over the warm-up week.
    """
    cost, clicks = series.adcost, series.adclicks
    if np.isnan(cost).any() or np.isnan(clicks).any():
        raise ValueError(f"{series.advertiser_id}: interpolate before deriving cpc")
    if not (clicks > 0).any():
        raise ValueError(f"{series.advertiser_id}: all days have zero clicks")
    with np.errstate(divide="ignore", invalid="ignore"):
        cpc = np.where(clicks > 0, cost / np.maximum(clicks, 1e-300), np.nan)
    cpc = _interpolate_channel(cpc, "cpc", series.advertiser_id)
    lag7 = np.empty_like(cpc)
    lag7[WARMUP_DAYS:] = cpc[:-WARMUP_DAYS]
    lag7[:WARMUP_DAYS] = cpc[0]
    return replace(series, cpc=cpc, lag7_cpc=lag7)


def extract_budget(series: AdvertiserSeries) -> AdvertiserSeries:
    """Write each calendar month's total ad cost to every day of that month.

    This is the monthly piecewise-constant budget proxy; partial months at
    the panel edges carry the partial sum.
    """
    if series.adcost is None or np.isnan(series.adcost).any():
        raise ValueError(f"{series.advertiser_id}: adcost missing, cannot extract budget")
    months = series.dates.astype("datetime64[M]")
    budget = np.empty(len(series.dates))
    for m in np.unique(months):
        mask = months == m
        budget[mask] = series.adcost[mask].sum()
    return replace(series, adbudget=budget)


def clean_panel(panel: PanelDataset, max_missing_frac: float = 0.01) -> PanelDataset:
    """filter_missing, then interpolate, derive cpc, and extract budgets."""
    survivors = filter_missing(panel, max_missing_frac)
    cleaned = {}
    for aid, s in survivors.advertisers.items():
        s = interpolate_linear(s)
        s = derive_cpc(s)
        s = extract_budget(s)
        cleaned[aid] = s
    return PanelDataset(advertisers=cleaned)
