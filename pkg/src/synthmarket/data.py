"""Price CSV ingestion, simple returns, and training windows."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "DataError",
    "PriceTable",
    "ReturnsDataset",
    "load_prices",
    "to_returns",
    "select_window",
    "load_returns",
    "save_returns",
    "as_matrix",
]


class DataError(ValueError):
    """Malformed or invalid input data."""


@dataclass(frozen=True)
class PriceTable:
    dates: tuple[str, ...]
    tickers: tuple[str, ...]
    prices: np.ndarray  # (T, d)

    def __post_init__(self):
        prices = np.array(self.prices, dtype=float)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "tickers", tuple(self.tickers))
        if prices.ndim != 2:
            raise DataError("prices must be a T x d matrix")
        T, d = prices.shape
        if d < 1 or T < 2:
            raise DataError(f"need at least 2 dates and 1 ticker, got T={T}, d={d}")
        if len(self.dates) != T or len(self.tickers) != d:
            raise DataError("dates/tickers do not match the price matrix shape")
        if not np.all(np.isfinite(prices)):
            raise DataError("prices contain missing or non-finite values")
        bad = np.argwhere(prices <= 0)
        if bad.size:
            r, c = bad[0]
            raise DataError(f"non-positive price at row {r + 1}, column {self.tickers[c]!r}")
        prices.setflags(write=False)
        object.__setattr__(self, "prices", prices)


@dataclass(frozen=True)
class ReturnsDataset:
    tickers: tuple[str, ...]
    returns: np.ndarray  # (n, d)
    dates: tuple[str, ...]

    def __post_init__(self):
        x = np.array(self.returns, dtype=float)
        if x.ndim != 2 or x.shape[1] < 1:
            raise DataError("returns must be an n x d matrix with d >= 1")
        object.__setattr__(self, "tickers", tuple(self.tickers))
        object.__setattr__(self, "dates", tuple(self.dates))
        if len(self.tickers) != x.shape[1] or len(self.dates) != x.shape[0]:
            raise DataError("tickers/dates do not match the returns shape")
        if not np.all(np.isfinite(x)):
            raise DataError("returns contain non-finite values")
        if np.any(x <= -1.0):
            raise DataError("returns must exceed -1")
        x.setflags(write=False)
        object.__setattr__(self, "returns", x)

    @property
    def n(self) -> int:
        return self.returns.shape[0]

    @property
    def d(self) -> int:
        return self.returns.shape[1]

    @classmethod
    def from_array(cls, x, tickers=None, dates=None) -> "ReturnsDataset":
        x = np.atleast_2d(np.asarray(x, dtype=float))
        n, d = x.shape
        tickers = tickers if tickers is not None else [f"A{k + 1}" for k in range(d)]
        dates = dates if dates is not None else [str(i) for i in range(n)]
        return cls(tuple(tickers), x, tuple(dates))


def as_matrix(ds) -> np.ndarray:
    """The (n, d) return matrix of a ReturnsDataset or array-like."""
    if isinstance(ds, ReturnsDataset):
        return ds.returns
    x = np.asarray(ds, dtype=float)
    return x.reshape(1, -1) if x.ndim == 1 else x


def read_table(path, delimiter: str, kind: str):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{kind} file not found: {path}")
    with path.open(newline="", encoding="utf-8-sig") as fh:
        rows = list(csv.reader(fh, delimiter=delimiter))
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise DataError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    if len(header) < 2:
        raise DataError(f"{path}: header must be 'date,<ticker1>,...'")
    tickers = [h.strip() for h in header[1:]]
    dates, values = [], []
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise DataError(f"{path}: row {lineno} has {len(row)} cells, expected {len(header)}")
        dates.append(row[0].strip())
        vals = []
        for col, cell in zip(tickers, row[1:]):
            try:
                v = float(cell)
            except ValueError:
                raise DataError(f"{path}: non-numeric cell {cell!r} at row {lineno}, column {col!r}") from None
            if not math.isfinite(v):
                raise DataError(f"{path}: non-finite cell at row {lineno}, column {col!r}")
            vals.append(v)
        values.append(vals)
    return tickers, dates, np.array(values, dtype=float).reshape(len(dates), len(tickers))


def load_prices(path, delimiter: str = ",", sort: bool = True) -> PriceTable:
    """Read a ``date,<ticker...>`` CSV of prices into a validated PriceTable.

    Rows are sorted by date label (ISO dates sort correctly as strings);
    duplicate dates and non-positive prices are rejected with their location.
    """
    tickers, dates, prices = read_table(path, delimiter, "price")
    seen: dict[str, int] = {}
    for lineno, dt in enumerate(dates, start=2):
        if dt in seen:
            raise DataError(f"{path}: duplicate date {dt!r} at rows {seen[dt]} and {lineno}")
        seen[dt] = lineno
    bad = np.argwhere(prices <= 0)
    if bad.size:
        r, c = bad[0]
        raise DataError(f"{path}: non-positive price at row {r + 2}, column {tickers[c]!r}")
    if sort:
        order = sorted(range(len(dates)), key=dates.__getitem__)
        dates = [dates[i] for i in order]
        prices = prices[order]
    return PriceTable(tuple(dates), tuple(tickers), prices)


def to_returns(pt: PriceTable, log: bool = False) -> ReturnsDataset:
    """Simple returns p[t+1]/p[t] - 1 (or log returns when ``log`` is set)."""
    p = pt.prices
    x = np.log(p[1:] / p[:-1]) if log else (p[1:] - p[:-1]) / p[:-1]
    return ReturnsDataset(pt.tickers, x, pt.dates[1:])


def select_window(ds: ReturnsDataset, start: int, length: int) -> ReturnsDataset:
    if start < 0 or length < 1 or start + length > ds.n:
        raise DataError(f"window [{start}, {start + length}) out of range for n={ds.n}")
    sl = slice(start, start + length)
    return ReturnsDataset(ds.tickers, ds.returns[sl], ds.dates[sl])


def load_returns(path, delimiter: str = ",") -> ReturnsDataset:
    """Read a returns CSV with the same layout as a price CSV."""
    tickers, dates, x = read_table(path, delimiter, "returns")
    return ReturnsDataset(tuple(tickers), x, tuple(dates))


def save_returns(ds: ReturnsDataset, path, index_name: str = "date") -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([index_name, *ds.tickers])
        for label, row in zip(ds.dates, ds.returns):
            w.writerow([label, *(repr(float(v)) for v in row)])
