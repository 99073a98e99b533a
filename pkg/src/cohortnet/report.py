"""Staff series, growth / rate / normalisation transforms, and CSV report emission."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Literal, Mapping, Sequence

from .errors import (
    DegenerateSeries,
    GapInYears,
    IoError,
    NegativeCount,
    ParseError,
    TooShort,
    ZeroBaseline,
)

Series = list[tuple[int, float]]
NormMethod = Literal["zscore", "minmax"]
RateMode = Literal["windowed-sum", "simple-diff"]

FIGURE_FAMILIES = (
    "fig1_counts",
    "fig2_growth",
    "fig3_cohort",
    "fig4_km",
    "fig5_6_turnover",
    "fig7_8_attack",
    "fig9_community",
    "fig10_13_network",
)


@dataclass(frozen=True)
class StaffSeries:
    points: tuple[tuple[int, float], ...]
    source: str = ""

    @property
    def years(self) -> list[int]:
        return [y for y, _ in self.points]

    @property
    def values(self) -> list[float]:
        return [v for _, v in self.points]

    def __len__(self) -> int:
        return len(self.points)

    def as_dict(self) -> dict[int, float]:
        return dict(self.points)


def load_staff_series(csv_path: str | os.PathLike, source: str | None = None) -> StaffSeries:
    """Read a ``year,count`` CSV; years must be contiguous and counts non-negative."""
    path = Path(csv_path)
    points: list[tuple[int, float]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["year", "count"]:
            raise ParseError("expected header 'year,count'", 1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise ParseError(f"expected 2 fields, got {len(row)}", lineno)
            try:
                year = int(row[0].strip())
                count = float(row[1].strip())
            except ValueError:
                raise ParseError(f"cannot parse {row!r}", lineno) from None
            if not math.isfinite(count):
                raise ParseError(f"non-finite count {row[1]!r}", lineno)
            if count < 0:
                raise NegativeCount(f"line {lineno}: negative count {count}")
            if points and year != points[-1][0] + 1:
                if year <= points[-1][0]:
                    raise ParseError(f"year {year} does not increase", lineno)
                raise GapInYears(f"line {lineno}: gap between {points[-1][0]} and {year}")
            points.append((year, count))
    return StaffSeries(tuple(points), source if source is not None else path.stem)


def as_series(data: StaffSeries | Mapping[int, float] | Sequence) -> Series:
    """Accept a StaffSeries, a year->value mapping, (year, value) pairs or bare values."""
    if isinstance(data, StaffSeries):
        return list(data.points)
    if isinstance(data, Mapping):
        return sorted(data.items())
    data = list(data)
    if data and isinstance(data[0], (tuple, list)):
        return [(y, v) for y, v in data]
    return list(enumerate(data))


def growth_rate(series) -> Series:
    """Year-on-year relative change (x_t - x_{t-1}) / x_{t-1}."""
    pts = as_series(series)
    if len(pts) < 2:
        raise TooShort("growth rate needs at least two points")
    out = []
    for (_, prev), (y, cur) in zip(pts, pts[1:]):
        if prev <= 0:
            raise ZeroBaseline(f"non-positive baseline before {y}")
        out.append((y, (cur - prev) / prev))
    return out


def compound(initial: float, rates: Iterable[float]) -> list[float]:
    """Rebuild a level series from its first value and successive growth rates."""
    values = [initial]
    for r in rates:
        values.append(values[-1] * (1.0 + r))
    return values


def windowed_rate_of_change(series, k: int = 5, mode: RateMode = "windowed-sum") -> Series:
    """Relative change of the trailing k-year sum, labelled by its end year.

    ``simple-diff`` instead returns (x_t - x_{t-k}) / x_{t-k}.
    """
    pts = as_series(series)
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(pts) < k + 1:
        raise TooShort(f"need at least {k + 1} points, got {len(pts)}")
    years = [y for y, _ in pts]
    xs = [v for _, v in pts]
    out = []
    if mode == "windowed-sum":
        sums = [math.fsum(xs[i - k + 1:i + 1]) for i in range(k - 1, len(xs))]
        for i in range(1, len(sums)):
            if sums[i - 1] <= 0:
                raise ZeroBaseline(f"zero windowed sum before {years[i + k - 1]}")
            out.append((years[i + k - 1], (sums[i] - sums[i - 1]) / sums[i - 1]))
    elif mode == "simple-diff":
        for i in range(k, len(xs)):
            if xs[i - k] <= 0:
                raise ZeroBaseline(f"zero baseline at {years[i - k]}")
            out.append((years[i], (xs[i] - xs[i - k]) / xs[i - k]))
    else:
        raise ValueError(f"unknown rate mode {mode!r}")
    return out


def normalize(series, method: NormMethod = "zscore") -> Series:
    """z-score (population std) or min-max scaling; ``None`` values pass through."""
    pts = as_series(series)
    vals = [v for _, v in pts if v is not None]
    if len(vals) < 2:
        raise DegenerateSeries("need at least two values")
    if method == "zscore":
        mu = math.fsum(vals) / len(vals)
        sd = math.sqrt(math.fsum((v - mu) ** 2 for v in vals) / len(vals))
        if sd == 0:
            raise DegenerateSeries("zero variance")
        f = lambda v: (v - mu) / sd  # noqa: E731
    elif method == "minmax":
        lo, hi = min(vals), max(vals)
        if hi == lo:
            raise DegenerateSeries("zero range")
        f = lambda v: (v - lo) / (hi - lo)  # noqa: E731
    else:
        raise ValueError(f"unknown normalisation {method!r}")
    return [(y, None if v is None else f(v)) for y, v in pts]


# --- tables ------------------------------------------------------------------


@dataclass
class MetricTable:
    name: str
    columns: list[str]
    rows: list[tuple] = field(default_factory=list)

    @classmethod
    def from_columns(
        cls, name: str, years: Sequence, columns: Mapping[str, Mapping | Sequence], year_col="year"
    ) -> MetricTable:
        """Align named columns on a shared year axis; missing entries become ``None``."""
        rows = []
        for i, y in enumerate(years):
            row = [y]
            for col in columns.values():
                if isinstance(col, Mapping):
                    row.append(col.get(y))
                else:
                    row.append(col[i] if i < len(col) else None)
            rows.append(tuple(row))
        return cls(name, [year_col, *columns], rows)

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


def format_cell(value: Any) -> str:
    if value is None:
        return "NA"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "NA"
        return repr(value)
    return str(value)


def write_table(table: MetricTable, path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(table.columns)
        for row in table.rows:
            w.writerow([format_cell(c) for c in row])


def file_sha256(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def config_hash(config: Mapping[str, Any] | None) -> str:
    blob = json.dumps(config or {}, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def emit_report(
    tables: Mapping[str, MetricTable] | Sequence[MetricTable],
    out_dir: str | os.PathLike,
    config: Mapping[str, Any] | None = None,
    inputs: Mapping[str, str | os.PathLike] | None = None,
) -> dict:
    """Write one CSV per table plus ``manifest.json``; returns the manifest."""
    if not isinstance(tables, Mapping):
        tables = {t.name: t for t in tables}
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        entries = []
        for name in sorted(tables):
            path = out / f"{name}.csv"
            write_table(tables[name], path)
            entries.append({
                "table": name,
                "file": path.name,
                "rows": len(tables[name].rows),
                "sha256": file_sha256(path),
            })
        manifest = {
            "config_hash": config_hash(config),
            "config": dict(config or {}),
            "inputs": {
                k: {"path": str(p), "sha256": file_sha256(p)} for k, p in sorted((inputs or {}).items())
            },
            "files": entries,
        }
        (out / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8"
        )
    except OSError as exc:
        raise IoError(f"cannot write report to {out}: {exc}") from exc
    return manifest
