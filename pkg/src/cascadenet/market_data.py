"""Loading, cleaning, and transforming daily low-price panels.

Input files are wide CSVs with header ``date,<TICKER>,...``; dates are ISO-8601,
cells are daily low prices, and blank or ``NaN`` cells mark missing
observations.  Cleaning is per asset: interior gaps are linearly interpolated,
leading/trailing gaps are filled from the nearest valid observation, and a
single interquartile-range pass flags level outliers which are re-filled the
same way.  Non-positive prices are never valid daily lows and are treated as
missing from the start.

Panels are aligned on the strict intersection of dates before log returns are
taken, so every asset contributes the same trading days.
"""

from __future__ import annotations

import csv
import datetime as dt
import logging
import math
import time
from dataclasses import dataclass

import numpy as np
import requests

from .errors import DataError, FetchError, ParseError

_log = logging.getLogger(__name__)

#: cell contents (lower-cased) meaning "no observation"
MISSING_TOKENS = {"", "nan", "na", "null", "none"}

REFERENCE_PRICE_MODES = ("mean", "first", "last")


@dataclass
class PriceSeries:
    """One asset's dated daily low prices; NaN marks a missing observation."""

    asset_id: str
    dates: list[dt.date]
    prices: np.ndarray

    def __post_init__(self):
        self.prices = np.asarray(self.prices, dtype=float)
        if len(self.dates) != self.prices.shape[0]:
            raise DataError(
                f"asset {self.asset_id}: {len(self.dates)} dates but "
                f"{self.prices.shape[0]} prices"
            )
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise DataError(f"asset {self.asset_id}: dates are not strictly increasing")

    def __len__(self) -> int:
        return len(self.dates)


@dataclass
class ReturnMatrix:
    """Aligned daily log returns: ``values[t, i]`` is asset ``i`` on ``dates[t]``."""

    asset_ids: list[str]
    dates: list[dt.date]
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.dates), len(self.asset_ids)):
            raise DataError(
                f"return matrix shape {self.values.shape} does not match "
                f"{len(self.dates)} dates x {len(self.asset_ids)} assets"
            )

    def column(self, asset_id: str) -> np.ndarray:
        try:
            return self.values[:, self.asset_ids.index(asset_id)]
        except ValueError:
            raise DataError(f"unknown asset {asset_id!r}") from None


@dataclass
class DescriptiveStats:
    """Per-asset summary of a return sample (std uses the n-1 divisor)."""

    asset_id: str
    mean: float
    std: float
    min: float
    max: float


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------

def load_price_csv(path) -> list[PriceSeries]:
    """Parse a wide ``date,<TICKER>,...`` CSV into one PriceSeries per column.

    Rows may appear in any order; they are sorted by date.  Duplicate dates,
    malformed dates, and non-numeric price cells are rejected with errors that
    name the offending line (and column where applicable).
    """
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: file is empty") from None
        if not header or header[0].strip().lower() != "date":
            raise ParseError(f"{path}: first header column must be 'date'")
        tickers = [c.strip() for c in header[1:]]
        if not tickers:
            raise ParseError(f"{path}: no asset columns in header")
        if len(set(tickers)) != len(tickers):
            raise ParseError(f"{path}: duplicate asset columns in header")

        rows: list[tuple[dt.date, list[float]]] = []
        seen: dict[dt.date, int] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(tickers) + 1:
                raise ParseError(
                    f"{path}: line {lineno}: expected {len(tickers) + 1} fields, "
                    f"got {len(row)}"
                )
            try:
                date = dt.date.fromisoformat(row[0].strip())
            except ValueError:
                raise ParseError(
                    f"{path}: line {lineno}: malformed date {row[0]!r}"
                ) from None
            if date in seen:
                raise ParseError(
                    f"{path}: line {lineno}: duplicate date {date.isoformat()} "
                    f"(first seen on line {seen[date]})"
                )
            seen[date] = lineno
            values = []
            for ticker, cell in zip(tickers, row[1:]):
                token = cell.strip()
                if token.lower() in MISSING_TOKENS:
                    values.append(math.nan)
                    continue
                try:
                    values.append(float(token))
                except ValueError:
                    raise ParseError(
                        f"{path}: line {lineno}: column {ticker}: "
                        f"non-numeric price {cell!r}"
                    ) from None
            rows.append((date, values))

    if not rows:
        raise DataError(f"{path}: no data rows")
    rows.sort(key=lambda item: item[0])
    dates = [date for date, _ in rows]
    matrix = np.array([vals for _, vals in rows], dtype=float)
    return [
        PriceSeries(ticker, list(dates), matrix[:, j])
        for j, ticker in enumerate(tickers)
    ]


def restrict_dates(
    series: PriceSeries,
    start: dt.date | None = None,
    end: dt.date | None = None,
) -> PriceSeries:
    """Keep only observations with start <= date <= end (bounds optional)."""
    keep = [
        i
        for i, d in enumerate(series.dates)
        if (start is None or d >= start) and (end is None or d <= end)
    ]
    return PriceSeries(
        series.asset_id,
        [series.dates[i] for i in keep],
        series.prices[keep] if keep else np.empty(0),
    )


# ---------------------------------------------------------------------------
# cleaning
# ---------------------------------------------------------------------------

def _fill_gaps(values: np.ndarray) -> np.ndarray:
    """Linear interpolation of interior NaNs; edge NaNs copy the nearest valid value."""
    valid = ~np.isnan(values)
    idx = np.arange(values.shape[0])
    # np.interp clamps to the first/last valid value outside the valid range,
    # which is exactly the back-/forward-fill wanted at the edges.
    return np.interp(idx, idx[valid], values[valid])


def clean_series(series: PriceSeries, iqr_multiplier: float = 1.5) -> PriceSeries:
    """Return a fully observed, outlier-filtered copy of ``series``.

    Steps, in order:

    1. non-positive prices are demoted to missing;
    2. gaps are filled (interior: linear interpolation; edges: nearest valid);
    3. one interquartile-range pass on the filled levels: values outside
       ``[Q1 - k*IQR, Q3 + k*IQR]`` are demoted to missing and re-filled as in
       step 2.  Quartiles are computed once; there is no second pass.

    Raises DataError when fewer than two usable observations remain.
    """
    values = series.prices.copy()
    values[values <= 0] = np.nan
    if np.count_nonzero(~np.isnan(values)) < 2:
        raise DataError(
            f"asset {series.asset_id}: fewer than two usable observations"
        )
    filled = _fill_gaps(values)

    q1, q3 = np.percentile(filled, [25.0, 75.0])
    iqr = q3 - q1
    lo = q1 - iqr_multiplier * iqr
    hi = q3 + iqr_multiplier * iqr
    outliers = (filled < lo) | (filled > hi)
    if outliers.any():
        filled[outliers] = np.nan
        filled = _fill_gaps(filled)

    return PriceSeries(series.asset_id, list(series.dates), filled)


def clean_panel(panel: list[PriceSeries], iqr_multiplier: float = 1.5) -> list[PriceSeries]:
    """clean_series applied to every asset of a panel."""
    return [clean_series(s, iqr_multiplier) for s in panel]


# ---------------------------------------------------------------------------
# alignment and transforms
# ---------------------------------------------------------------------------

def align_panel(panel: list[PriceSeries]) -> tuple[list[dt.date], np.ndarray]:
    """Strict date intersection of a cleaned panel.

    Returns the common dates (ascending) and the T x N price matrix on them.
    Raises DataError — listing each asset's coverage — when fewer than two
    common dates exist.
    """
    if not panel:
        raise DataError("empty panel")
    for s in panel:
        if np.isnan(s.prices).any():
            raise DataError(f"asset {s.asset_id}: series has gaps; clean it first")
    common = set(panel[0].dates)
    for s in panel[1:]:
        common &= set(s.dates)
    if len(common) < 2:
        coverage = "; ".join(
            f"{s.asset_id}: {s.dates[0].isoformat()}..{s.dates[-1].isoformat()} "
            f"({len(s)} rows)"
            for s in panel
        )
        raise DataError(
            f"date intersection across {len(panel)} assets has {len(common)} "
            f"dates (need at least 2); per-asset coverage: {coverage}"
        )
    dates = sorted(common)
    cols = []
    for s in panel:
        index = {d: i for i, d in enumerate(s.dates)}
        cols.append(s.prices[[index[d] for d in dates]])
    return dates, np.column_stack(cols)


def log_returns(panel: list[PriceSeries]) -> ReturnMatrix:
    """Daily log returns ln(P_t / P_{t-1}) on the panel's common dates.

    The matrix has T-1 rows for T common dates; row t is stamped with the later
    date of the pair.
    """
    dates, prices = align_panel(panel)
    if (prices <= 0).any():
        bad = [panel[j].asset_id for j in np.unique(np.argwhere(prices <= 0)[:, 1])]
        raise DataError(f"non-positive aligned prices for: {', '.join(bad)}")
    values = np.diff(np.log(prices), axis=0)
    return ReturnMatrix([s.asset_id for s in panel], dates[1:], values)


def normalize_prices(series: PriceSeries) -> np.ndarray:
    """Price path divided by its first observation (starts at exactly 1.0)."""
    if np.isnan(series.prices).any():
        raise DataError(f"asset {series.asset_id}: series has gaps; clean it first")
    if series.prices[0] <= 0:
        raise DataError(f"asset {series.asset_id}: first price is not positive")
    return series.prices / series.prices[0]


def reference_prices(panel: list[PriceSeries], mode: str = "mean") -> np.ndarray:
    """Per-asset reference price level over the panel's common window.

    ``mode`` selects the statistic: "mean" (default), "first", or "last"
    observation of the aligned window.
    """
    if mode not in REFERENCE_PRICE_MODES:
        raise DataError(
            f"unknown reference price mode {mode!r}; "
            f"expected one of {', '.join(REFERENCE_PRICE_MODES)}"
        )
    _, prices = align_panel(panel)
    if mode == "first":
        return prices[0].copy()
    if mode == "last":
        return prices[-1].copy()
    return prices.mean(axis=0)


def descriptive_stats(matrix: ReturnMatrix) -> list[DescriptiveStats]:
    """Mean / sample std (n-1) / min / max of each asset's return column."""
    if matrix.values.shape[0] < 2:
        raise DataError("need at least two return observations per asset")
    out = []
    for j, asset in enumerate(matrix.asset_ids):
        col = matrix.values[:, j]
        out.append(
            DescriptiveStats(
                asset_id=asset,
                mean=float(col.mean()),
                std=float(col.std(ddof=1)),
                min=float(col.min()),
                max=float(col.max()),
            )
        )
    return out


# ---------------------------------------------------------------------------
# remote fetch
# ---------------------------------------------------------------------------

def fetch_prices(
    tickers: list[str],
    start: dt.date,
    end: dt.date,
    endpoint: str,
    out_path,
    *,
    max_retries: int = 3,
    backoff: float = 0.5,
    timeout: float = 10.0,
):
    """Download daily lows for ``tickers`` and write the wide CSV to ``out_path``.

    The endpoint is queried per ticker as
    ``GET {endpoint}?symbol=<t>&start=<iso>&end=<iso>`` and must answer with a
    two-column ``date,low`` CSV body.  A 404 means the ticker is unknown: it is
    logged as a warning and omitted from the output.  Server errors (5xx) and
    connection failures are retried up to ``max_retries`` times before raising
    FetchError with the last status.

    This is a convenience for assembling input files; nothing else in the
    package performs network access.
    """
    columns: dict[str, dict[dt.date, str]] = {}
    for ticker in tickers:
        body = _fetch_one(ticker, start, end, endpoint, max_retries, backoff, timeout)
        if body is None:
            _log.warning("ticker %s not known to %s; omitting column", ticker, endpoint)
            continue
        columns[ticker] = _parse_quote_body(ticker, body)

    if not columns:
        raise DataError("no tickers could be fetched; nothing to write")

    all_dates = sorted(set().union(*[set(c) for c in columns.values()]))
    kept = [t for t in tickers if t in columns]
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["date"] + kept)
        for date in all_dates:
            writer.writerow(
                [date.isoformat()] + [columns[t].get(date, "") for t in kept]
            )
    return out_path


def _fetch_one(ticker, start, end, endpoint, max_retries, backoff, timeout):
    params = {"symbol": ticker, "start": start.isoformat(), "end": end.isoformat()}
    last_status = None
    for attempt in range(max_retries):
        try:
            resp = requests.get(endpoint, params=params, timeout=timeout)
        except requests.RequestException as exc:
            last_status = None
            _log.warning("fetch %s attempt %d failed: %s", ticker, attempt + 1, exc)
            time.sleep(backoff * attempt)
            continue
        if resp.status_code == 200:
            return resp.text
        if resp.status_code == 404:
            return None
        last_status = resp.status_code
        _log.warning(
            "fetch %s attempt %d: HTTP %d", ticker, attempt + 1, resp.status_code
        )
        time.sleep(backoff * attempt)
    raise FetchError(
        f"fetching {ticker} failed after {max_retries} attempts "
        f"(last status: {last_status})",
        status=last_status,
    )


def _parse_quote_body(ticker: str, body: str) -> dict[dt.date, str]:
    out: dict[dt.date, str] = {}
    lines = body.strip().splitlines()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        if lineno == 1 and line.lower().startswith("date"):
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(f"quote body for {ticker}: line {lineno}: {line!r}")
        try:
            date = dt.date.fromisoformat(parts[0].strip())
            float(parts[1])
        except ValueError:
            raise ParseError(
                f"quote body for {ticker}: line {lineno}: {line!r}"
            ) from None
        out[date] = parts[1].strip()
    return out
