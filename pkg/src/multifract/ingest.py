"""Loading and validation of daily price/volume series.

Input CSVs carry the header ``date,price,volume`` (ISO-8601 dates, ``.``
decimal separator). A universe is either a directory with one CSV per
ticker or a single long-format CSV with an extra leading ``ticker``
column. Returns are percent log returns, ``100 * ln(P_t / P_{t-1})``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .errors import (
    DataError,
    DuplicateDate,
    EmptyUniverse,
    MalformedRow,
    MissingDays,
    NonPositivePrice,
    TooShort,
)

CSV_HEADER = ("date", "price", "volume")
LONG_CSV_HEADER = ("ticker", "date", "price", "volume")


@dataclass
class RawSeries:
    """Daily price/volume observations for one ticker, sorted by date."""

    ticker: str
    dates: tuple
    prices: np.ndarray
    volumes: np.ndarray

    def __post_init__(self):
        self.dates = tuple(self.dates)
        self.prices = np.asarray(self.prices, dtype=float)
        self.volumes = np.asarray(self.volumes, dtype=float)
        n = len(self.dates)
        if not (len(self.prices) == len(self.volumes) == n):
            raise DataError(f"{self.ticker}: dates/prices/volumes lengths differ")
        if n == 0:
            raise DataError(f"{self.ticker}: empty series")
        for a, b in zip(self.dates, self.dates[1:]):
            if b == a:
                raise DuplicateDate(self.ticker, b)
            if b < a:
                raise DataError(f"{self.ticker}: dates not strictly increasing")
        if not np.all(np.isfinite(self.prices)) or not np.all(np.isfinite(self.volumes)):
            raise DataError(f"{self.ticker}: non-finite price or volume")
        if np.any(self.prices <= 0):
            raise NonPositivePrice(value=float(self.prices[self.prices <= 0][0]))
        if np.any(self.volumes < 0):
            raise DataError(f"{self.ticker}: negative volume")

    @property
    def n(self) -> int:
        return len(self.dates)


@dataclass
class ReturnSeries:
    """Percent log returns, ``values[t] = 100 * ln(P_{t+1} / P_t)``."""

    ticker: str
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise DataError(f"{self.ticker}: return values must be one-dimensional")
        if not np.all(np.isfinite(self.values)):
            raise DataError(f"{self.ticker}: non-finite return values")

    @property
    def n(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class QuartileAssignment:
    """Volume-rank group of a ticker; quartile 1 holds the largest volumes."""

    ticker: str
    mean_log_volume: float
    quartile: int


def _open_csv(path: Path):
    try:
        return path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None


def _parse_row(path, line_no, row, n_cols):
    if len(row) != n_cols:
        raise MalformedRow(path, line_no, f"expected {n_cols} columns, got {len(row)}")
    *head, d, p, v = row
    try:
        day = date.fromisoformat(d.strip())
    except ValueError:
        raise MalformedRow(path, line_no, f"bad ISO-8601 date {d!r}") from None
    try:
        price = float(p)
        volume = float(v)
    except ValueError:
        raise MalformedRow(path, line_no, f"bad numeric field in {row!r}") from None
    if not np.isfinite(price) or not np.isfinite(volume):
        raise MalformedRow(path, line_no, "non-finite price or volume")
    if price <= 0:
        raise NonPositivePrice(line=line_no, value=price, path=path)
    if volume < 0:
        raise MalformedRow(path, line_no, f"negative volume {volume}")
    return (head[0].strip() if head else None), day, price, volume


def _assemble(path, ticker, rows):
    if not rows:
        raise DataError(f"{path}: no data rows")
    seen = {}
    for line_no, day, price, volume in rows:
        if day in seen:
            raise DuplicateDate(path, day)
        seen[day] = (price, volume)
    rows = sorted(rows, key=lambda r: r[1])
    return RawSeries(
        ticker=ticker,
        dates=[r[1] for r in rows],
        prices=[r[2] for r in rows],
        volumes=[r[3] for r in rows],
    )


def load_csv(path) -> RawSeries:
    """Load one ``date,price,volume`` CSV; the ticker is the file stem.

    Rows are re-sorted by date if needed. Malformed rows, duplicate dates
    and non-positive prices raise with the offending line number.
    """
    path = Path(path)
    with _open_csv(path) as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if tuple(h.strip().lower() for h in header) != CSV_HEADER:
            raise MalformedRow(path, 1, f"expected header {','.join(CSV_HEADER)}")
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            _, day, price, volume = _parse_row(path, line_no, row, 3)
            rows.append((line_no, day, price, volume))
    return _assemble(path, path.stem, rows)


def load_universe(path) -> list[RawSeries]:
    """Load a universe: a directory of per-ticker CSVs or one long CSV.

    The long format has header ``ticker,date,price,volume``. Series are
    returned sorted by ticker.
    """
    path = Path(path)
    if path.is_dir():
        files = sorted(path.glob("*.csv"))
        if not files:
            raise EmptyUniverse(f"{path}: no CSV files")
        return [load_csv(f) for f in files]

    with _open_csv(path) as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        cols = tuple(h.strip().lower() for h in header)
        if cols == CSV_HEADER:
            return [load_csv(path)]
        if cols != LONG_CSV_HEADER:
            raise MalformedRow(
                path, 1, f"expected header {','.join(LONG_CSV_HEADER)} or {','.join(CSV_HEADER)}"
            )
        by_ticker: dict[str, list] = {}
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            ticker, day, price, volume = _parse_row(path, line_no, row, 4)
            if not ticker:
                raise MalformedRow(path, line_no, "empty ticker")
            by_ticker.setdefault(ticker, []).append((line_no, day, price, volume))
    if not by_ticker:
        raise EmptyUniverse(f"{path}: no data rows")
    return [_assemble(path, t, rows) for t, rows in sorted(by_ticker.items())]


def validate_continuity(series: RawSeries) -> RawSeries:
    """Return the series unchanged iff its dates form a contiguous daily range."""
    first, last = series.dates[0], series.dates[-1]
    if (last - first).days + 1 == series.n:
        return series
    present = set(series.dates)
    gaps = []
    day = first
    while day <= last:
        if day not in present:
            gaps.append(day)
        day += timedelta(days=1)
    raise MissingDays(series.ticker, gaps)


def log_returns(series: RawSeries) -> ReturnSeries:
    """Percent log returns of a validated price series (length n-1)."""
    if series.n < 2:
        raise TooShort(f"{series.ticker}: need at least 2 prices, got {series.n}")
    values = 100.0 * np.diff(np.log(series.prices))
    return ReturnSeries(ticker=series.ticker, values=values)


def assign_quartiles(universe) -> list[QuartileAssignment]:
    """Rank a universe by mean daily volume and split it into quartiles.

    ``mean_log_volume`` is the natural log of the arithmetic mean of the
    daily volumes (quote-currency units). Quartile 1 holds the top 25%;
    when the universe size is not divisible by 4 the remainder goes to
    the highest-volume quartiles first. Ties break by ticker.
    """
    universe = list(universe)
    if len(universe) < 4:
        raise EmptyUniverse(f"need at least 4 series to form quartiles, got {len(universe)}")
    entries = []
    for s in universe:
        avg = float(np.mean(s.volumes))
        if avg <= 0:
            raise DataError(f"{s.ticker}: non-positive average volume")
        entries.append((s.ticker, float(np.log(avg))))
    entries.sort(key=lambda e: (-e[1], e[0]))

    n = len(entries)
    base, rem = divmod(n, 4)
    sizes = [base + (1 if i < rem else 0) for i in range(4)]
    out = []
    pos = 0
    for quartile, size in enumerate(sizes, start=1):
        for ticker, mlv in entries[pos : pos + size]:
            out.append(QuartileAssignment(ticker=ticker, mean_log_volume=mlv, quartile=quartile))
        pos += size
    return out
