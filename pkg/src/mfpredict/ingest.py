"""Minute-price ingestion, trading-day validation and return series.

Prices arrive as delimiter-separated rows of ``(date, time, price)``.  Within a
day, timestamps are ranked to produce minute indices ``1..k``; only days with
exactly ``minutes_per_day`` distinct stamps survive :func:`clean_days`.
Returns are always formed inside a single day: the overnight move between the
last print of one day and the first print of the next is never a minute
return.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Sequence

import numpy as np

from .exceptions import IngestError, InsufficientDataError

DEFAULT_MINUTES_PER_DAY = 240


@dataclass(frozen=True)
class Schema:
    """Column map for the minute-price table.

    Columns are addressed by header name (``str``) or zero-based position
    (``int``).  Positions are required when ``header`` is False.  The time
    column may hold ``HH:MM``/``HH:MM:SS`` clock stamps or plain integer
    minute indices; either way it only serves as a sort key within the day.
    """

    date: str | int = "date"
    time: str | int = "time"
    price: str | int = "price"
    delimiter: str = ","
    header: bool = True


@dataclass(frozen=True, slots=True)
class MinuteRecord:
    day: dt.date
    minute_index: int
    price: float
    stamp: int = 0  # raw sort key (seconds of day or integer index)


@dataclass
class LoadResult:
    records: list[MinuteRecord]
    rows_read: int
    rows_rejected: int


@dataclass(frozen=True)
class RejectedDay:
    day: dt.date
    reason: str
    n_records: int


@dataclass(frozen=True, eq=False)
class TradingDay:
    """One validated trading day; ``prices[k]`` is the price at minute ``k + 1``."""

    day: dt.date
    prices: np.ndarray

    def __post_init__(self):
        prices = np.asarray(self.prices, dtype=float)
        if prices.ndim != 1 or prices.size < 2:
            raise InsufficientDataError(f"{self.day}: a trading day needs at least 2 prices")
        if not np.all(prices > 0):
            raise IngestError(f"{self.day}: non-positive price")
        prices.setflags(write=False)
        object.__setattr__(self, "prices", prices)
        returns = minute_returns(prices)
        returns.setflags(write=False)
        object.__setattr__(self, "_returns", returns)

    @property
    def minute_returns(self) -> np.ndarray:
        return self._returns

    @property
    def close_price(self) -> float:
        return float(self.prices[-1])

    @property
    def open_price(self) -> float:
        return float(self.prices[0])

    def return_series(self) -> "ReturnSeries":
        n = self._returns.size
        return ReturnSeries(
            self._returns,
            np.full(n, np.datetime64(self.day, "D")),
            np.arange(2, n + 2),
        )


@dataclass(frozen=True, eq=False)
class ReturnSeries:
    """Finite return values labelled by ``(day, minute_index)``.

    A minute return is labelled with the minute at which it ends, so the
    first return of a day carries index 2.  Daily returns carry the index of
    the closing minute.
    """

    values: np.ndarray
    days: np.ndarray
    minutes: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        days = np.asarray(self.days, dtype="datetime64[D]")
        minutes = np.asarray(self.minutes, dtype=np.int64)
        if not (values.shape == days.shape == minutes.shape) or values.ndim != 1:
            raise ValueError("values and labels must be 1-d arrays of equal length")
        if not np.all(np.isfinite(values)):
            raise ValueError("return series contains non-finite values")
        if values.size > 1:
            dd = np.diff(days.astype(np.int64))
            dm = np.diff(minutes)
            if not np.all((dd > 0) | ((dd == 0) & (dm > 0))):
                raise ValueError("labels must be strictly increasing in (day, minute_index)")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "days", days)
        object.__setattr__(self, "minutes", minutes)

    def __len__(self) -> int:
        return self.values.size

    @property
    def labels(self) -> list[tuple[dt.date, int]]:
        return [(d.item(), int(m)) for d, m in zip(self.days, self.minutes)]

    @classmethod
    def concatenate(cls, parts: Sequence["ReturnSeries"]) -> "ReturnSeries":
        return cls(
            np.concatenate([p.values for p in parts]),
            np.concatenate([p.days for p in parts]),
            np.concatenate([p.minutes for p in parts]),
        )


@dataclass(frozen=True, eq=False)
class WindowSlice:
    window_id: int
    first_day: dt.date
    last_day: dt.date
    start: int  # index of first member day in the day sequence
    returns: ReturnSeries
    cum_return: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "cum_return", float(np.sum(self.returns.values)))

    @property
    def day_range(self) -> tuple[dt.date, dt.date]:
        return self.first_day, self.last_day


def _parse_stamp(text: str) -> int:
    text = text.strip()
    if text.isdigit():
        return int(text)
    parts = text.split(":")
    if len(parts) not in (2, 3) or not all(p.isdigit() for p in parts):
        raise ValueError(f"unrecognised time stamp {text!r}")
    h, m = int(parts[0]), int(parts[1])
    s = int(parts[2]) if len(parts) == 3 else 0
    if h > 23 or m > 59 or s > 59:
        raise ValueError(f"time stamp out of range {text!r}")
    return 3600 * h + 60 * m + s


def _resolve(col: str | int, header: list[str] | None) -> int:
    if isinstance(col, int):
        return col
    if header is None:
        raise IngestError(f"column {col!r} given by name but the table has no header")
    try:
        return header.index(col)
    except ValueError:
        raise IngestError(f"column {col!r} not found in header {header}", line=1) from None


def load_minute_prices(source: IO[str] | Iterable[str], schema: Schema = Schema()) -> LoadResult:
    """Parse minute prices into records sorted by ``(day, minute_index)``.

    Malformed rows raise :class:`IngestError` naming the line.  Rows with a
    non-positive or non-finite price are dropped and counted in
    ``rows_rejected``.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source, delimiter=schema.delimiter)
    header = None
    cols = None
    by_day: dict[dt.date, list[tuple[int, float]]] = defaultdict(list)
    rows_read = rows_rejected = 0
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if schema.header and header is None:
            header = [c.strip() for c in row]
            continue
        if cols is None:
            cols = tuple(_resolve(c, header) for c in (schema.date, schema.time, schema.price))
        rows_read += 1
        try:
            date_s, time_s, price_s = (row[i] for i in cols)
        except IndexError:
            raise IngestError(f"expected at least {max(cols) + 1} fields, got {len(row)}", line) from None
        try:
            day = dt.date.fromisoformat(date_s.strip())
            stamp = _parse_stamp(time_s)
            price = float(price_s)
        except ValueError as exc:
            raise IngestError(str(exc), line) from None
        if not (math.isfinite(price) and price > 0):
            rows_rejected += 1
            continue
        by_day[day].append((stamp, price))

    records = []
    for day in sorted(by_day):
        rows = sorted(by_day[day], key=lambda r: r[0])
        records.extend(MinuteRecord(day, k, p, st) for k, (st, p) in enumerate(rows, start=1))
    return LoadResult(records, rows_read, rows_rejected)


def clean_days(
    records: Sequence[MinuteRecord], expected: int = DEFAULT_MINUTES_PER_DAY
) -> tuple[list[TradingDay], list[RejectedDay]]:
    """Group records into days and keep only complete ones.

    Reason codes for rejected days: ``missing_minutes``, ``extra_minutes``,
    ``duplicate_minutes`` (two prints share a stamp) and
    ``noncontiguous_minutes`` (indices are not exactly ``1..expected``).
    """
    accepted: list[TradingDay] = []
    rejected: list[RejectedDay] = []
    i, n = 0, len(records)
    while i < n:
        day = records[i].day
        j = i
        while j < n and records[j].day == day:
            j += 1
        group = records[i:j]
        i = j
        count = len(group)
        if count < expected:
            rejected.append(RejectedDay(day, "missing_minutes", count))
        elif count > expected:
            rejected.append(RejectedDay(day, "extra_minutes", count))
        elif len({r.stamp for r in group}) != count:
            rejected.append(RejectedDay(day, "duplicate_minutes", count))
        elif [r.minute_index for r in group] != list(range(1, expected + 1)):
            rejected.append(RejectedDay(day, "noncontiguous_minutes", count))
        else:
            accepted.append(TradingDay(day, np.array([r.price for r in group])))
    return accepted, rejected


def minute_returns(prices: Sequence[float] | np.ndarray) -> np.ndarray:
    """Log-price differences within one day."""
    p = np.asarray(prices, dtype=float)
    if p.size < 2:
        raise InsufficientDataError("need at least 2 prices to form a return")
    if not np.all(p > 0):
        raise ValueError("prices must be strictly positive")
    return np.diff(np.log(p))


def daily_returns(days: Sequence[TradingDay]) -> ReturnSeries:
    """Close-to-close log returns, labelled by the later day."""
    if len(days) < 2:
        raise InsufficientDataError("daily returns need at least 2 trading days")
    closes = np.array([d.close_price for d in days])
    return ReturnSeries(
        np.diff(np.log(closes)),
        np.array([np.datetime64(d.day, "D") for d in days[1:]]),
        np.array([d.prices.size for d in days[1:]]),
    )


def iter_window_slices(days: Sequence[TradingDay], w: int, stride: int = 1) -> Iterator[WindowSlice]:
    """Yield windows of ``w`` consecutive trading days.

    Window ``k`` (``window_id = k + 1``) covers ``days[k*stride : k*stride + w]``.
    """
    if w < 1 or stride < 1:
        raise ValueError("window length and stride must be >= 1")
    if len(days) < w:
        raise InsufficientDataError(f"{len(days)} days is fewer than the window length {w}")
    series = [d.return_series() for d in days]
    for k, start in enumerate(range(0, len(days) - w + 1, stride)):
        yield WindowSlice(
            window_id=k + 1,
            first_day=days[start].day,
            last_day=days[start + w - 1].day,
            start=start,
            returns=ReturnSeries.concatenate(series[start : start + w]),
        )


def window_slices(days: Sequence[TradingDay], w: int, stride: int = 1) -> list[WindowSlice]:
    return list(iter_window_slices(days, w, stride))


def load_rates(source: IO[str] | Iterable[str], delimiter: str = ",") -> dict[dt.date, float]:
    """Read a ``date,rate`` table (header optional) of daily risk-free returns."""
    rates = {}
    for k, row in enumerate(csv.reader(source, delimiter=delimiter), start=1):
        if not row or not row[0].strip():
            continue
        try:
            day = dt.date.fromisoformat(row[0].strip())
        except ValueError:
            if k == 1:
                continue
            raise IngestError(f"bad date {row[0]!r}", k) from None
        try:
            rates[day] = float(row[1])
        except (IndexError, ValueError):
            raise IngestError("expected a numeric rate in the second column", k) from None
    return rates
