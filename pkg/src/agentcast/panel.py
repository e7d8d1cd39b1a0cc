"""Panel data model: regular time grids, CSV ingestion, splitting.

A panel is a keyed collection of univariate series that share one
frequency.  Monthly, quarterly and yearly grids are calendar-aware (the
anchor day-of-month is preserved and clamped to month end); weekly, daily
and hourly grids are fixed-duration.  All timestamps are naive calendar
instants.
"""

from __future__ import annotations

import calendar
import io
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    DuplicateTimestampError,
    FrequencyError,
    InsufficientDataError,
    ParseError,
    SchemaError,
    SeriesTooShortError,
)

# Season lengths follow standard forecasting-library conventions.
SEASON_LENGTHS = {"Y": 1, "Q": 4, "M": 12, "W": 52, "D": 7, "H": 24}

_UNIT_NAMES = {
    "Y": "yearly",
    "Q": "quarterly",
    "M": "monthly",
    "W": "weekly",
    "D": "daily",
    "H": "hourly",
}

_MONTH_STEPS = {"Y": 12, "Q": 3, "M": 1}
_TIMEDELTA_STEPS = {
    "W": timedelta(weeks=1),
    "D": timedelta(days=1),
    "H": timedelta(hours=1),
}

DEFAULT_ID_COLUMN = "unique_id"
DEFAULT_TIME_COLUMN = "ds"
DEFAULT_VALUE_COLUMN = "y"

DEFAULT_LEVELS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


@dataclass(frozen=True)
class Frequency:
    """A supported sampling frequency; ``unit`` is one of Y/Q/M/W/D/H."""

    unit: str

    def __post_init__(self):
        if self.unit not in SEASON_LENGTHS:
            raise FrequencyError(
                f"unsupported frequency unit {self.unit!r}; "
                f"expected one of {sorted(SEASON_LENGTHS)}"
            )

    @property
    def season_length(self) -> int:
        return SEASON_LENGTHS[self.unit]

    @property
    def name(self) -> str:
        return _UNIT_NAMES[self.unit]

    def __str__(self) -> str:
        return self.unit


def validate_levels(levels: Sequence[float]) -> tuple[float, ...]:
    """Check quantile levels: strictly increasing, all inside (0, 1)."""
    out = tuple(float(l) for l in levels)
    if not out:
        raise ValueError("quantile levels must be non-empty")
    for l in out:
        if not 0.0 < l < 1.0:
            raise ValueError(f"quantile level {l} outside open interval (0, 1)")
    if any(b <= a for a, b in zip(out, out[1:])):
        raise ValueError(f"quantile levels must be strictly increasing, got {out}")
    return out


def level_column(level: float) -> str:
    """Canonical CSV column name for a quantile level, e.g. 0.1 -> 'q10'."""
    return f"q{level * 100:g}"


def _add_months(anchor: datetime, months: int) -> datetime:
    """Shift by whole months, preserving anchor day clamped to month end."""
    month_index = anchor.month - 1 + months
    year = anchor.year + month_index // 12
    month = month_index % 12 + 1
    day = min(anchor.day, calendar.monthrange(year, month)[1])
    return anchor.replace(year=year, month=month, day=day)


def _grid_point(anchor: datetime, freq: Frequency, steps: int) -> datetime:
    """The grid instant ``steps`` frequency steps after ``anchor``."""
    if freq.unit in _MONTH_STEPS:
        return _add_months(anchor, _MONTH_STEPS[freq.unit] * steps)
    return anchor + _TIMEDELTA_STEPS[freq.unit] * steps


def future_grid(last_timestamp: datetime, freq: Frequency, h: int) -> list[datetime]:
    """Exactly ``h`` instants continuing the grid right after ``last_timestamp``."""
    if h < 1:
        raise ValueError(f"horizon must be >= 1, got {h}")
    return [_grid_point(last_timestamp, freq, k) for k in range(1, h + 1)]


def _matches_grid(timestamps: Sequence[datetime], freq: Frequency) -> bool:
    anchor = timestamps[0]
    if freq.unit not in _MONTH_STEPS:
        return all(
            ts == _grid_point(anchor, freq, i) for i, ts in enumerate(timestamps)
        )
    # Month-based grids: the anchor day may exceed some months' length, so
    # observed days are clamped.  Recover it as the largest day seen.
    anchor_day = max(ts.day for ts in timestamps)
    step = _MONTH_STEPS[freq.unit]
    for i, ts in enumerate(timestamps):
        month_index = anchor.month - 1 + step * i
        year = anchor.year + month_index // 12
        month = month_index % 12 + 1
        day = min(anchor_day, calendar.monthrange(year, month)[1])
        if ts != anchor.replace(year=year, month=month, day=day):
            return False
    return True


def infer_frequency(timestamps: Sequence[datetime]) -> Frequency:
    """Return the unique frequency whose anchored grid the timestamps lie on."""
    if len(timestamps) < 3:
        raise InsufficientDataError(
            f"need at least 3 timestamps to infer a frequency, got {len(timestamps)}"
        )
    if any(b <= a for a, b in zip(timestamps, timestamps[1:])):
        raise FrequencyError("timestamps must be strictly increasing")
    for unit in ("H", "D", "W", "M", "Q", "Y"):
        freq = Frequency(unit)
        if _matches_grid(timestamps, freq):
            return freq
    raise FrequencyError(
        f"timestamps starting at {timestamps[0].isoformat()} do not lie on any "
        "supported regular grid (Y/Q/M/W/D/H)"
    )


@dataclass(frozen=True)
class Series:
    """One univariate series: strictly increasing timestamps plus values."""

    timestamps: tuple[datetime, ...]
    values: np.ndarray  # float64, same length as timestamps

    def __post_init__(self):
        object.__setattr__(
            self, "values", np.asarray(self.values, dtype=float)
        )
        if len(self.timestamps) != len(self.values):
            raise ValueError("timestamps and values length mismatch")

    def __len__(self) -> int:
        return len(self.values)


class SeriesPanel:
    """Immutable keyed collection of series sharing one frequency."""

    def __init__(self, series: Mapping[str, Series], freq: Frequency | None):
        if series and freq is None:
            raise FrequencyError("non-empty panel requires a frequency")
        for key, s in series.items():
            if not key:
                raise SchemaError("series id must be non-empty")
            if len(s) < 1:
                raise InsufficientDataError(f"series {key!r} is empty")
            if any(b <= a for a, b in zip(s.timestamps, s.timestamps[1:])):
                raise FrequencyError(
                    f"series {key!r}: timestamps must be strictly increasing"
                )
            if freq is not None and not _matches_grid(s.timestamps, freq):
                raise FrequencyError(
                    f"series {key!r}: timestamps are not regular on the "
                    f"{freq.name} grid"
                )
        self._series = {key: series[key] for key in sorted(series)}
        self._freq = freq

    @property
    def freq(self) -> Frequency | None:
        return self._freq

    @property
    def season_length(self) -> int:
        return self._freq.season_length if self._freq else 1

    def keys(self) -> list[str]:
        return list(self._series)

    def __len__(self) -> int:
        return len(self._series)

    def __contains__(self, key: str) -> bool:
        return key in self._series

    def __getitem__(self, key: str) -> Series:
        return self._series[key]

    def items(self) -> Iterator[tuple[str, Series]]:
        return iter(self._series.items())

    def head(self, counts: int | Mapping[str, int]) -> "SeriesPanel":
        """Panel truncated to the first ``counts`` observations per series."""
        out = {}
        for key, s in self._series.items():
            k = counts if isinstance(counts, int) else counts[key]
            if not 1 <= k <= len(s):
                raise SeriesTooShortError(
                    f"series {key!r}: cannot keep {k} of {len(s)} observations"
                )
            out[key] = Series(s.timestamps[:k], s.values[:k])
        return SeriesPanel(out, self._freq)

    def equals(self, other: "SeriesPanel") -> bool:
        if self.keys() != other.keys():
            return False
        if (self._freq is None) != (other._freq is None):
            return False
        if self._freq is not None and self._freq.unit != other._freq.unit:
            return False
        for key in self.keys():
            a, b = self[key], other[key]
            if a.timestamps != b.timestamps:
                return False
            if not np.array_equal(a.values, b.values):
                return False
        return True

    def to_csv(
        self,
        path_or_buffer=None,
        id_column: str = DEFAULT_ID_COLUMN,
        time_column: str = DEFAULT_TIME_COLUMN,
        value_column: str = DEFAULT_VALUE_COLUMN,
    ):
        """Write the panel in long format; values at full (repr) precision."""
        rows = [f"{id_column},{time_column},{value_column}"]
        for key, s in self._series.items():
            for ts, v in zip(s.timestamps, s.values):
                rows.append(f"{key},{format_timestamp(ts)},{float(v)!r}")
        text = "\n".join(rows) + "\n"
        if path_or_buffer is None:
            return text
        if hasattr(path_or_buffer, "write"):
            path_or_buffer.write(text)
        else:
            with open(path_or_buffer, "w") as fp:
                fp.write(text)
        return None


def format_timestamp(ts: datetime) -> str:
    """ISO-8601; date-only when there is no time-of-day component."""
    if ts.hour == ts.minute == ts.second == ts.microsecond == 0:
        return ts.date().isoformat()
    return ts.isoformat(sep="T")


def parse_timestamp(text: str) -> datetime:
    try:
        return datetime.fromisoformat(text.strip())
    except ValueError:
        pass
    for fmt in ("%Y-%m-%d %H:%M", "%Y-%m-%dT%H:%M", "%Y/%m/%d"):
        try:
            return datetime.strptime(text.strip(), fmt)
        except ValueError:
            continue
    raise ValueError(f"unparseable timestamp {text!r}")


def _split_csv_line(line: str) -> list[str]:
    # Plain comma split; the canonical schema has no quoted fields.
    return [cell.strip() for cell in line.rstrip("\r\n").split(",")]


def parse_panel(
    source,
    id_column: str = DEFAULT_ID_COLUMN,
    time_column: str = DEFAULT_TIME_COLUMN,
    value_column: str = DEFAULT_VALUE_COLUMN,
    freq: Frequency | str | None = None,
) -> SeriesPanel:
    """Parse a long-format CSV (header + id/timestamp/value columns).

    ``source`` may be a path, a text stream, or bytes.  Frequency is
    inferred from the data unless ``freq`` overrides it.
    """
    if isinstance(freq, str):
        freq = Frequency(freq)
    if isinstance(source, bytes):
        lines = io.StringIO(source.decode("utf-8"))
    elif hasattr(source, "read"):
        lines = source
    else:
        lines = open(source, "r")

    with_close = not hasattr(source, "read") or isinstance(source, bytes)
    try:
        header_line = lines.readline()
        if not header_line:
            raise SchemaError("empty input: missing header row")
        header = _split_csv_line(header_line)
        positions = {}
        for col in (id_column, time_column, value_column):
            if col not in header:
                raise SchemaError(f"missing column {col!r} in CSV header")
            positions[col] = header.index(col)

        raw: dict[str, list[tuple[datetime, float]]] = {}
        seen: set[tuple[str, datetime]] = set()
        for row_number, line in enumerate(lines, start=2):
            if not line.strip():
                continue
            cells = _split_csv_line(line)
            if len(cells) < len(header):
                raise ParseError(
                    f"row {row_number}: expected {len(header)} columns, got {len(cells)}"
                )
            key = cells[positions[id_column]]
            if not key:
                raise ParseError(f"row {row_number}: empty series id")
            try:
                ts = parse_timestamp(cells[positions[time_column]])
            except ValueError as exc:
                raise ParseError(f"row {row_number}: {exc}") from None
            try:
                value = float(cells[positions[value_column]])
            except ValueError:
                raise ParseError(
                    f"row {row_number}: unparseable value "
                    f"{cells[positions[value_column]]!r}"
                ) from None
            if (key, ts) in seen:
                raise DuplicateTimestampError(
                    f"row {row_number}: duplicate timestamp "
                    f"{format_timestamp(ts)} for series {key!r}"
                )
            seen.add((key, ts))
            raw.setdefault(key, []).append((ts, value))
    finally:
        if with_close:
            lines.close()

    series = {}
    for key, pairs in raw.items():
        pairs.sort(key=lambda p: p[0])
        series[key] = Series(
            tuple(ts for ts, _ in pairs),
            np.array([v for _, v in pairs], dtype=float),
        )

    if not series:
        return SeriesPanel({}, freq)

    if freq is None:
        for s in series.values():
            if len(s) >= 3:
                freq = infer_frequency(s.timestamps)
                break
        else:
            raise InsufficientDataError(
                "no series has >= 3 observations; pass an explicit frequency"
            )
    return SeriesPanel(series, freq)


def train_test_split(panel: SeriesPanel, h: int) -> tuple[SeriesPanel, SeriesPanel]:
    """Hold out the final ``h`` observations of every series."""
    if h < 1:
        raise ValueError(f"horizon must be >= 1, got {h}")
    train, test = {}, {}
    for key, s in panel.items():
        if len(s) <= h:
            raise SeriesTooShortError(
                f"series {key!r} has {len(s)} observations; need more than h={h}"
            )
        train[key] = Series(s.timestamps[:-h], s.values[:-h])
        test[key] = Series(s.timestamps[-h:], s.values[-h:])
    return SeriesPanel(train, panel.freq), SeriesPanel(test, panel.freq)


@dataclass(frozen=True)
class ForecastEntry:
    """Forecast of one series: h timestamps, h means, optional h x L quantiles."""

    timestamps: tuple[datetime, ...]
    mean: np.ndarray
    quantiles: np.ndarray | None = None
    fallback: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))
        if len(self.timestamps) != len(self.mean):
            raise ValueError("timestamps and mean length mismatch")
        if self.quantiles is not None:
            q = np.asarray(self.quantiles, dtype=float)
            if q.shape[0] != len(self.mean):
                raise ValueError("quantile matrix row count != horizon")
            object.__setattr__(self, "quantiles", q)


class ForecastFrame:
    """Per-series horizon forecasts of a single model."""

    def __init__(
        self,
        model: str,
        entries: Mapping[str, ForecastEntry],
        levels: tuple[float, ...] | None,
    ):
        if levels is not None:
            levels = validate_levels(levels)
            for key, e in entries.items():
                if e.quantiles is None:
                    raise ValueError(f"entry {key!r} missing quantiles")
                if e.quantiles.shape[1] != len(levels):
                    raise ValueError(
                        f"entry {key!r}: quantile matrix has "
                        f"{e.quantiles.shape[1]} columns, expected {len(levels)}"
                    )
        else:
            for key, e in entries.items():
                if e.quantiles is not None:
                    raise ValueError(f"entry {key!r} carries quantiles but no levels")
        self.model = model
        self.levels = levels
        self._entries = {key: entries[key] for key in sorted(entries)}

    @property
    def has_quantiles(self) -> bool:
        return self.levels is not None

    def keys(self) -> list[str]:
        return list(self._entries)

    def __getitem__(self, key: str) -> ForecastEntry:
        return self._entries[key]

    def items(self) -> Iterator[tuple[str, ForecastEntry]]:
        return iter(self._entries.items())

    def horizon(self) -> int:
        first = next(iter(self._entries.values()))
        return len(first.mean)

    def to_csv_rows(self) -> list[str]:
        rows = []
        for key, e in self._entries.items():
            for i, (ts, mu) in enumerate(zip(e.timestamps, e.mean)):
                cells = [key, format_timestamp(ts), self.model, f"{mu:.12g}"]
                if self.levels is not None:
                    cells.extend(f"{q:.12g}" for q in e.quantiles[i])
                rows.append(",".join(cells))
        return rows

    def csv_header(
        self,
        id_column: str = DEFAULT_ID_COLUMN,
        time_column: str = DEFAULT_TIME_COLUMN,
    ) -> str:
        cells = [id_column, time_column, "model", "mean"]
        if self.levels is not None:
            cells.extend(level_column(l) for l in self.levels)
        return ",".join(cells)


def frames_to_csv(frames: Sequence[ForecastFrame]) -> str:
    """Concatenate forecast frames into one CSV document."""
    if not frames:
        return ""
    header = frames[0].csv_header()
    for f in frames[1:]:
        if f.csv_header() != header:
            raise ValueError("frames disagree on quantile levels")
    lines = [header]
    for f in frames:
        lines.extend(f.to_csv_rows())
    return "\n".join(lines) + "\n"
