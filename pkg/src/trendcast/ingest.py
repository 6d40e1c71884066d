"""File-based loaders for daily case counts and search-interest exports.

Canonical CSV formats (UTF-8, comma-separated, ISO 8601 dates):

    cases:  date,region,positive_increase
    trends: date,region,query,value        query in {restaurant, bar}

A converter maps the upstream tracking-project JSON export (records keyed
by `state`, `date` as YYYYMMDD, field `positiveIncrease`) onto the cases
format. Live HTTP fetching is out of scope; the toolkit consumes files.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import warnings
from pathlib import Path

from .errors import (
    DataWarning,
    DegenerateRange,
    EmptyIntersection,
    ParseError,
    ValueOutOfRange,
)
from .series import RegionDataset, TimeSeries, align, from_points, normalize_0_100

# 50 states + DC + the five territories covered by the tracking project
US_REGIONS = frozenset(
    """AK AL AR AS AZ CA CO CT DC DE FL GA GU HI IA ID IL IN KS KY LA MA MD ME
    MI MN MO MP MS MT NC ND NE NH NJ NM NV NY OH OK OR PA PR RI SC SD TN TX UT
    VA VI VT WA WI WV WY""".split()
)

DEFAULT_WINDOW = (dt.date(2020, 4, 9), dt.date(2020, 7, 7))

CASES_HEADER = ["date", "region", "positive_increase"]
TRENDS_HEADER = ["date", "region", "query", "value"]


def _parse_date(raw: str, path: Path, row: int) -> dt.date:
    try:
        return dt.date.fromisoformat(raw.strip())
    except ValueError as exc:
        raise ParseError(f"{path}:{row}: column 'date': {exc}") from None


def _parse_int(raw: str, column: str, path: Path, row: int) -> int:
    try:
        return int(raw.strip())
    except ValueError:
        raise ParseError(
            f"{path}:{row}: column {column!r}: {raw!r} is not an integer"
        ) from None


def _open_rows(path: str | Path, expected_header: list[str]):
    path = Path(path)
    if not path.exists():
        raise ParseError(f"{path}: file not found")
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}:1: empty file") from None
        if [h.strip() for h in header] != expected_header:
            raise ParseError(
                f"{path}:1: expected header {','.join(expected_header)!r}, "
                f"got {','.join(header)!r}"
            )
        yield from ((i, row) for i, row in enumerate(reader, start=2))


def load_cases_csv(
    path: str | Path,
    window: tuple[dt.date, dt.date] = DEFAULT_WINDOW,
    known_regions: frozenset[str] = US_REGIONS,
) -> dict[str, TimeSeries]:
    """One raw daily-new-cases series per region, restricted to the window.

    Negative daily increases (upstream corrections) clamp to 0 with a
    warning; rows for unknown regions are skipped with a warning.
    """
    path = Path(path)
    points: dict[str, list[tuple[dt.date, float]]] = {}
    for row_no, row in _open_rows(path, CASES_HEADER):
        if len(row) != 3:
            raise ParseError(f"{path}:{row_no}: expected 3 columns, got {len(row)}")
        day = _parse_date(row[0], path, row_no)
        region = row[1].strip().upper()
        count = _parse_int(row[2], "positive_increase", path, row_no)
        if region not in known_regions:
            warnings.warn(
                f"{path}:{row_no}: unknown region {region!r}, row skipped",
                DataWarning,
                stacklevel=2,
            )
            continue
        if not window[0] <= day <= window[1]:
            continue
        if count < 0:
            warnings.warn(
                f"{path}:{row_no}: negative increase {count} clamped to 0",
                DataWarning,
                stacklevel=2,
            )
            count = 0
        points.setdefault(region, []).append((day, float(count)))
    return {
        region: from_points("cases", region, pts) for region, pts in points.items()
    }


def load_trends_csv(
    path: str | Path,
    query: str,
    window: tuple[dt.date, dt.date] = DEFAULT_WINDOW,
) -> dict[str, TimeSeries]:
    """One 0-100 search-interest series per region for the given query."""
    if query not in ("restaurant", "bar"):
        raise ValueError(f"query must be 'restaurant' or 'bar', got {query!r}")
    path = Path(path)
    points: dict[str, list[tuple[dt.date, float]]] = {}
    for row_no, row in _open_rows(path, TRENDS_HEADER):
        if len(row) != 4:
            raise ParseError(f"{path}:{row_no}: expected 4 columns, got {len(row)}")
        if row[2].strip().lower() != query:
            continue
        day = _parse_date(row[0], path, row_no)
        region = row[1].strip().upper()
        value = _parse_int(row[3], "value", path, row_no)
        if not 0 <= value <= 100:
            raise ValueOutOfRange(
                f"{path}:{row_no}: search interest {value} outside [0, 100]"
            )
        if not window[0] <= day <= window[1]:
            continue
        points.setdefault(region, []).append((day, float(value)))
    return {region: from_points(query, region, pts) for region, pts in points.items()}


def build_datasets(
    cases: dict[str, TimeSeries],
    restaurant: dict[str, TimeSeries],
    bar: dict[str, TimeSeries],
) -> list[RegionDataset]:
    """Normalize cases to 0-100, align the three series and bundle by region.

    Regions missing from any map are dropped with a warning, as are regions
    whose cases series is constant (normalization undefined). Results are
    sorted by region code.
    """
    if not cases or not restaurant or not bar:
        raise EmptyIntersection("at least one input map is empty")
    common = sorted(set(cases) & set(restaurant) & set(bar))
    everywhere = set(cases) | set(restaurant) | set(bar)
    for region in sorted(everywhere - set(common)):
        warnings.warn(
            f"region {region} missing from at least one source, excluded",
            DataWarning,
            stacklevel=2,
        )
    datasets = []
    for region in common:
        try:
            normalized = normalize_0_100(cases[region])
        except DegenerateRange:
            warnings.warn(
                f"region {region}: constant cases series, excluded",
                DataWarning,
                stacklevel=2,
            )
            continue
        try:
            datasets.append(align(normalized, restaurant[region], bar[region]))
        except EmptyIntersection:
            warnings.warn(
                f"region {region}: no common dates across sources, excluded",
                DataWarning,
                stacklevel=2,
            )
    if not datasets:
        raise EmptyIntersection("no region present in all three sources")
    return datasets


def write_cases_csv(path: str | Path, cases: dict[str, TimeSeries]) -> None:
    """Write a cases map back to the canonical CSV format."""
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(CASES_HEADER)
        for region in sorted(cases):
            ts = cases[region]
            for day, value in zip(ts.dates, ts.values):
                writer.writerow([day.isoformat(), region, int(value)])


def write_trends_csv(path: str | Path, query: str, trends: dict[str, TimeSeries]) -> None:
    """Write a trends map back to the canonical CSV format."""
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(TRENDS_HEADER)
        for region in sorted(trends):
            ts = trends[region]
            for day, value in zip(ts.dates, ts.values):
                writer.writerow([day.isoformat(), region, query, int(value)])


def convert_tracking_json(
    input_path: str | Path,
    output_path: str | Path,
    known_regions: frozenset[str] = US_REGIONS,
) -> int:
    """Convert the tracking-project JSON export to the canonical cases CSV.

    Returns the number of rows written. Records with missing or null
    positiveIncrease become 0; unknown regions are skipped with a warning.
    """
    input_path = Path(input_path)
    if not input_path.exists():
        raise ParseError(f"{input_path}: file not found")
    try:
        records = json.loads(input_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{input_path}: invalid JSON: {exc}") from None
    if not isinstance(records, list):
        raise ParseError(f"{input_path}: expected a JSON array of records")

    rows = []
    for i, rec in enumerate(records):
        try:
            raw_date = str(rec["date"])
            region = str(rec["state"]).strip().upper()
        except (KeyError, TypeError):
            raise ParseError(f"{input_path}: record {i}: missing 'date' or 'state'")
        try:
            day = dt.datetime.strptime(raw_date, "%Y%m%d").date()
        except ValueError:
            raise ParseError(
                f"{input_path}: record {i}: date {raw_date!r} is not YYYYMMDD"
            ) from None
        if region not in known_regions:
            warnings.warn(
                f"{input_path}: record {i}: unknown region {region!r}, skipped",
                DataWarning,
                stacklevel=2,
            )
            continue
        increase = rec.get("positiveIncrease") or 0
        rows.append((day, region, int(increase)))

    rows.sort()
    with Path(output_path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(CASES_HEADER)
        for day, region, increase in rows:
            writer.writerow([day.isoformat(), region, increase])
    return len(rows)
