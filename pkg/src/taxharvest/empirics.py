"""Fiscal time-series ingestion, gap imputation and composition ratios.

Input is a yearly CSV of tax-head collections plus GDP.  Gaps are filled
by a k-nearest-neighbours rule over time (the mean of the k present
values in the same column whose years are closest, ties broken toward the
earlier year).  Composition reports give each head's share of total tax
and the per-year total-tax-to-GDP ratio with its peak.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "TAX_HEADS",
    "CSV_HEADER",
    "FiscalSeries",
    "CompositionReport",
    "load_csv",
    "save_csv",
    "knn_impute",
    "composition",
]

TAX_HEADS = ("personal_income_tax", "company_tax", "vat", "excise", "other")
_ALL_COLUMNS = TAX_HEADS + ("gdp",)
CSV_HEADER = "year," + ",".join(_ALL_COLUMNS)


@dataclass
class FiscalSeries:
    """Yearly fiscal series; missing entries are NaN."""

    years: np.ndarray
    values: dict[str, np.ndarray]

    def __post_init__(self):
        self.years = np.asarray(self.years, dtype=int)
        if np.any(np.diff(self.years) <= 0):
            raise ValueError("years must be strictly increasing")
        missing_cols = sorted(set(_ALL_COLUMNS) - set(self.values))
        if missing_cols:
            raise ValueError(f"missing columns: {', '.join(missing_cols)}")
        extra_cols = sorted(set(self.values) - set(_ALL_COLUMNS))
        if extra_cols:
            raise ValueError(f"unknown columns: {', '.join(extra_cols)}")
        for name in _ALL_COLUMNS:
            col = np.asarray(self.values[name], dtype=float)
            if col.shape != self.years.shape:
                raise ValueError(f"column {name!r} length does not match years")
            present = col[~np.isnan(col)]
            if np.any(present < 0):
                raise ValueError(f"column {name!r} has negative values")
            if name == "gdp" and np.any(present == 0):
                raise ValueError("gdp must be > 0 where present")
            self.values[name] = col

    def __len__(self) -> int:
        return len(self.years)

    def n_missing(self) -> int:
        return int(sum(np.isnan(col).sum() for col in self.values.values()))

    def copy(self) -> "FiscalSeries":
        return FiscalSeries(self.years.copy(),
                            {k: v.copy() for k, v in self.values.items()})


def load_csv(path) -> FiscalSeries:
    """Parse a fiscal CSV; empty cells are missing values.

    The header must match ``CSV_HEADER`` exactly.  Rows may arrive in any
    order but duplicate years are rejected; malformed rows raise with
    their line number.
    """
    with open(path, "r", encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if not lines:
        raise ValueError("empty file: expected a header row")
    if lines[0] != CSV_HEADER:
        raise ValueError(f"bad header: expected {CSV_HEADER!r}, got {lines[0]!r}")

    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if line == "":
            continue
        parts = line.split(",")
        if len(parts) != 7:
            raise ValueError(f"line {lineno}: expected 7 fields, got {len(parts)}")
        try:
            year = int(parts[0])
        except ValueError:
            raise ValueError(f"line {lineno}: bad year {parts[0]!r}") from None
        cells = []
        for name, cell in zip(_ALL_COLUMNS, parts[1:]):
            if cell == "":
                cells.append(math.nan)
                continue
            try:
                value = float(cell)
            except ValueError:
                raise ValueError(f"line {lineno}: bad value {cell!r} in {name}") from None
            if not math.isfinite(value):
                raise ValueError(f"line {lineno}: non-finite value in {name}")
            if value < 0:
                raise ValueError(f"line {lineno}: negative value in {name}")
            if name == "gdp" and value == 0:
                raise ValueError(f"line {lineno}: gdp must be > 0")
            cells.append(value)
        rows.append((year, cells))

    if not rows:
        raise ValueError("no data rows")
    years = [y for y, _ in rows]
    dupes = sorted({y for y in years if years.count(y) > 1})
    if dupes:
        raise ValueError(f"duplicate year(s): {', '.join(map(str, dupes))}")
    rows.sort(key=lambda row: row[0])
    table = np.array([cells for _, cells in rows], dtype=float)
    return FiscalSeries(
        np.array([y for y, _ in rows], dtype=int),
        {name: table[:, i] for i, name in enumerate(_ALL_COLUMNS)})


def save_csv(series: FiscalSeries, path) -> None:
    """Write the canonical CSV form (17 significant digits, blanks for gaps)."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(CSV_HEADER + "\n")
        for i, year in enumerate(series.years):
            cells = [str(int(year))]
            for name in _ALL_COLUMNS:
                value = series.values[name][i]
                cells.append("" if math.isnan(value) else f"{value:.17g}")
            handle.write(",".join(cells) + "\n")


def knn_impute(series: FiscalSeries, k: int = 3) -> FiscalSeries:
    """Fill each gap with the mean of the k nearest same-column values.

    Nearness is absolute year distance; ties break toward the earlier
    year.  Present values are never touched, so the operation is
    idempotent.  A column with fewer than k present values is an error.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    out = series.copy()
    years = series.years
    for name in _ALL_COLUMNS:
        col = out.values[name]
        present = ~np.isnan(col)
        missing_idx = np.flatnonzero(~present)
        if missing_idx.size == 0:
            continue
        present_idx = np.flatnonzero(present)
        if present_idx.size < k:
            raise ValueError(
                f"cannot impute column {name!r}: {present_idx.size} present values, need >= k={k}")
        for idx in missing_idx:
            ranked = sorted(present_idx,
                            key=lambda j: (abs(int(years[j]) - int(years[idx])), years[j]))
            neighbours = ranked[:k]
            col[idx] = float(np.mean(col[neighbours]))
    return out


@dataclass
class CompositionReport:
    """Head shares of total tax plus the yearly total-tax-to-GDP ratio."""

    shares: dict[str, float]
    years: np.ndarray
    ratios: np.ndarray
    peak_year: int
    peak_ratio: float

    def to_dict(self) -> dict:
        return {
            "shares": {k: float(v) for k, v in self.shares.items()},
            "years": [int(y) for y in self.years],
            "ratios": [float(r) for r in self.ratios],
            "peak_year": self.peak_year,
            "peak_ratio": self.peak_ratio,
        }


def composition(series: FiscalSeries, year_range: tuple[int, int] | None = None) -> CompositionReport:
    """Shares and ratio series over an inclusive year range (default: all).

    Requires a fully imputed series over the range; shares are column sums
    divided by the grand tax total, ratios are per-year head totals over
    GDP, and the peak picks the earliest year on ties.
    """
    if year_range is None:
        mask = np.ones(len(series), dtype=bool)
    else:
        lo, hi = year_range
        if lo > hi:
            raise ValueError(f"bad year range: {lo}..{hi}")
        mask = (series.years >= lo) & (series.years <= hi)
    if not mask.any():
        raise ValueError("no years in the requested range")

    gappy = [name for name in _ALL_COLUMNS if np.isnan(series.values[name][mask]).any()]
    if gappy:
        raise ValueError(
            f"missing values in range for column(s) {', '.join(gappy)}; impute first")

    head_sums = {name: float(series.values[name][mask].sum()) for name in TAX_HEADS}
    total = sum(head_sums.values())
    if total <= 0:
        raise ValueError("total tax over the range is zero; shares undefined")
    shares = {name: head_sums[name] / total for name in TAX_HEADS}

    years = series.years[mask]
    head_total = np.sum([series.values[name][mask] for name in TAX_HEADS], axis=0)
    ratios = head_total / series.values["gdp"][mask]
    peak_idx = int(np.argmax(ratios))
    return CompositionReport(shares=shares, years=years, ratios=ratios,
                             peak_year=int(years[peak_idx]),
                             peak_ratio=float(ratios[peak_idx]))
