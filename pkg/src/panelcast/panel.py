"""Data model for monthly count panels: series, calendars, ingestion, splits."""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence, TextIO

import numpy as np

from .errors import DuplicateError, GapError, LengthError

CSV_HEADER = ("series_id", "category", "month", "value")

_MONTH_RE = re.compile(r"^(\d{4})-(\d{2})$")


@dataclass(frozen=True, order=True)
class Month:
    """A calendar month, the only time unit the package knows about."""

    year: int
    month: int

    def __post_init__(self):
        if not 1 <= self.month <= 12:
            raise ValueError(f"month out of range: {self.month}")

    @classmethod
    def parse(cls, text: str) -> "Month":
        m = _MONTH_RE.match(text.strip())
        if m is None:
            raise ValueError(f"not a YYYY-MM month: {text!r}")
        return cls(int(m.group(1)), int(m.group(2)))

    def shift(self, months: int) -> "Month":
        total = self.year * 12 + (self.month - 1) + months
        return Month(total // 12, total % 12 + 1)

    def diff(self, other: "Month") -> int:
        """Number of months from `other` to self (positive if self is later)."""
        return (self.year - other.year) * 12 + (self.month - other.month)

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"


def month_range(start: Month, length: int) -> list[Month]:
    return [start.shift(i) for i in range(length)]


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """One monthly count series: identity, category, calendar anchor, values.

    Values are consecutive months starting at `start`, every entry finite
    and >= 0. The array is frozen after construction.
    """

    id: str
    category: str
    start: Month
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError(f"series {self.id!r}: values must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"series {self.id!r}: values must be finite")
        if np.any(arr < 0):
            raise ValueError(f"series {self.id!r}: values must be >= 0")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def end(self) -> Month:
        return self.start.shift(len(self) - 1)

    def months(self) -> list[Month]:
        return month_range(self.start, len(self))

    def month_at(self, index: int) -> Month:
        return self.start.shift(index)

    def index_of(self, month: Month) -> int:
        idx = month.diff(self.start)
        if not 0 <= idx < len(self):
            raise KeyError(f"{month} outside series {self.id!r}")
        return idx

    def slice(self, start_index: int, stop_index: int) -> "TimeSeries":
        if not 0 <= start_index < stop_index <= len(self):
            raise IndexError(f"bad slice [{start_index}:{stop_index}] for series {self.id!r}")
        return TimeSeries(
            id=self.id,
            category=self.category,
            start=self.start.shift(start_index),
            values=self.values[start_index:stop_index],
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (
            self.id == other.id
            and self.category == other.category
            and self.start == other.start
            and np.array_equal(self.values, other.values)
        )


# Exogenous channels: {channel name: {series id: TimeSeries}}
ExogenousMap = dict[str, dict[str, TimeSeries]]


@dataclass(frozen=True, eq=False)
class Panel:
    """A keyed collection of series plus optional aligned exogenous channels."""

    series: dict[str, TimeSeries]
    exogenous: ExogenousMap = field(default_factory=dict)
    frequency: int = 12

    def __post_init__(self):
        if self.frequency < 2:
            raise ValueError(f"seasonal period must be >= 2, got {self.frequency}")
        ordered = {sid: self.series[sid] for sid in sorted(self.series)}
        for sid, ts in ordered.items():
            if ts.id != sid:
                raise ValueError(f"series keyed {sid!r} carries id {ts.id!r}")
        exo_ordered: ExogenousMap = {}
        for name in sorted(self.exogenous):
            channel = self.exogenous[name]
            exo_ordered[name] = {sid: channel[sid] for sid in sorted(channel)}
            for sid, exo in exo_ordered[name].items():
                target = ordered.get(sid)
                if target is None:
                    raise ValueError(f"exogenous {name!r} names unknown series {sid!r}")
                if exo.start != target.start or len(exo) != len(target):
                    raise ValueError(
                        f"exogenous {name!r} for {sid!r} does not cover the target span "
                        f"({exo.start}..{exo.end} vs {target.start}..{target.end})"
                    )
        object.__setattr__(self, "series", ordered)
        object.__setattr__(self, "exogenous", exo_ordered)

    def __len__(self) -> int:
        return len(self.series)

    def ids(self) -> list[str]:
        return list(self.series)

    def categories(self) -> list[str]:
        return sorted({ts.category for ts in self.series.values()})

    def with_exogenous(self, exogenous: ExogenousMap) -> "Panel":
        merged = dict(self.exogenous)
        merged.update(exogenous)
        return Panel(series=self.series, exogenous=merged, frequency=self.frequency)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Panel):
            return NotImplemented
        if self.frequency != other.frequency:
            return False
        if self.series != other.series:
            return False
        return self.exogenous == other.exogenous


@dataclass(frozen=True)
class SplitSpec:
    """How many trailing months to hold out for testing and validation."""

    test_length: int = 12
    validation_length: int = 12

    def __post_init__(self):
        if self.test_length < 1:
            raise ValueError(f"test_length must be >= 1, got {self.test_length}")
        if self.validation_length < 0:
            raise ValueError(f"validation_length must be >= 0, got {self.validation_length}")


def _coerce_stream(source: str | TextIO) -> TextIO:
    if isinstance(source, str):
        return open(source, "r", encoding="utf-8", newline="")
    return source


def _parse_rows(
    source: str | TextIO, schema: Mapping[str, str] | None
) -> Iterator[tuple[str, str, Month, float]]:
    columns = dict(zip(CSV_HEADER, CSV_HEADER))
    if schema:
        columns.update(schema)
    stream = _coerce_stream(source)
    try:
        reader = csv.DictReader(stream)
        if reader.fieldnames is None:
            raise ValueError("empty input: no header row")
        missing = [c for c in columns.values() if c not in reader.fieldnames]
        if missing:
            raise ValueError(f"missing columns: {missing}")
        for lineno, row in enumerate(reader, start=2):
            sid = row[columns["series_id"]].strip()
            category = row[columns["category"]].strip()
            month = Month.parse(row[columns["month"]])
            raw = row[columns["value"]].strip()
            try:
                value = float(raw)
            except ValueError:
                raise ValueError(f"row {lineno}: non-numeric value {raw!r}") from None
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"row {lineno}: value must be finite and >= 0, got {raw!r}")
            yield sid, category, month, value
    finally:
        if isinstance(source, str):
            stream.close()


def _assemble(
    rows: Iterable[tuple[str, str, Month, float]]
) -> dict[str, TimeSeries]:
    observations: dict[str, dict[Month, float]] = {}
    categories: dict[str, str] = {}
    for sid, category, month, value in rows:
        per_series = observations.setdefault(sid, {})
        if month in per_series:
            raise DuplicateError(sid, str(month))
        per_series[month] = value
        known = categories.setdefault(sid, category)
        if known != category:
            raise ValueError(f"series {sid!r} carries two categories: {known!r} and {category!r}")

    built: dict[str, TimeSeries] = {}
    for sid in sorted(observations):
        months = sorted(observations[sid])
        start = months[0]
        for i, month in enumerate(months):
            expected = start.shift(i)
            if month != expected:
                raise GapError(sid, str(expected))
        values = np.array([observations[sid][m] for m in months], dtype=np.float64)
        built[sid] = TimeSeries(id=sid, category=categories[sid], start=start, values=values)
    return built


def load_panel(
    source: str | TextIO,
    schema: Mapping[str, str] | None = None,
    frequency: int = 12,
) -> Panel:
    """Ingest the `series_id,category,month,value` CSV format into a Panel.

    Rows may arrive in any order; months must form a gap-free run per series.
    Duplicate (id, month) pairs and negative or non-numeric values are hard
    errors, never silently merged.
    """
    return Panel(series=_assemble(_parse_rows(source, schema)), frequency=frequency)


def load_exogenous(
    source: str | TextIO, schema: Mapping[str, str] | None = None
) -> ExogenousMap:
    """Ingest exogenous channels from the same CSV format.

    The category column carries the exogenous-variable name, so one file can
    hold several channels.
    """
    by_channel: dict[str, list[tuple[str, str, Month, float]]] = {}
    for sid, name, month, value in _parse_rows(source, schema):
        by_channel.setdefault(name, []).append((sid, name, month, value))
    return {name: _assemble(rows) for name, rows in sorted(by_channel.items())}


def write_panel_csv(panel: Panel, target: str | TextIO) -> None:
    stream = open(target, "w", encoding="utf-8", newline="") if isinstance(target, str) else target
    try:
        writer = csv.writer(stream)
        writer.writerow(CSV_HEADER)
        for ts in panel.series.values():
            for month, value in zip(ts.months(), ts.values):
                writer.writerow([ts.id, ts.category, str(month), _format_value(value)])
    finally:
        if isinstance(target, str):
            stream.close()


def write_exogenous_csv(exogenous: ExogenousMap, target: str | TextIO) -> None:
    stream = open(target, "w", encoding="utf-8", newline="") if isinstance(target, str) else target
    try:
        writer = csv.writer(stream)
        writer.writerow(CSV_HEADER)
        for name, channel in exogenous.items():
            for ts in channel.values():
                for month, value in zip(ts.months(), ts.values):
                    writer.writerow([ts.id, name, str(month), _format_value(value)])
    finally:
        if isinstance(target, str):
            stream.close()


def _format_value(value: float) -> str:
    if float(value).is_integer():
        return str(int(value))
    return repr(float(value))


def dumps_panel_csv(panel: Panel) -> str:
    buf = io.StringIO()
    write_panel_csv(panel, buf)
    return buf.getvalue()


def split(panel: Panel, spec: SplitSpec) -> tuple[Panel, Panel]:
    """Hold out the last `test_length` months of every series.

    Exogenous channels split at the same calendar boundary as their targets.
    """
    train_series: dict[str, TimeSeries] = {}
    test_series: dict[str, TimeSeries] = {}
    for sid, ts in panel.series.items():
        boundary = len(ts) - spec.test_length
        if boundary < 1:
            raise LengthError(
                f"series {sid!r} has {len(ts)} months, cannot hold out {spec.test_length}"
            )
        train_series[sid] = ts.slice(0, boundary)
        test_series[sid] = ts.slice(boundary, len(ts))

    def _split_exo(keep: dict[str, TimeSeries], test_side: bool) -> ExogenousMap:
        out: ExogenousMap = {}
        for name, channel in panel.exogenous.items():
            part: dict[str, TimeSeries] = {}
            for sid, exo in channel.items():
                boundary = len(exo) - spec.test_length
                part[sid] = exo.slice(boundary, len(exo)) if test_side else exo.slice(0, boundary)
            out[name] = part
        return out

    train = Panel(series=train_series, exogenous=_split_exo(train_series, False),
                  frequency=panel.frequency)
    test = Panel(series=test_series, exogenous=_split_exo(test_series, True),
                 frequency=panel.frequency)
    return train, test


def group(panel: Panel, mode: str) -> list[Panel]:
    """Partition a panel for global-model training.

    mode "cat" yields one sub-panel per distinct category; mode "all" yields
    the input as a single group.
    """
    mode = mode.lower()
    if mode == "all":
        return [panel]
    if mode != "cat":
        raise ValueError(f"grouping mode must be 'cat' or 'all', got {mode!r}")
    panels = []
    for category in panel.categories():
        members = {sid: ts for sid, ts in panel.series.items() if ts.category == category}
        exo = {
            name: {sid: exo for sid, exo in channel.items() if sid in members}
            for name, channel in panel.exogenous.items()
        }
        exo = {name: channel for name, channel in exo.items() if channel}
        panels.append(Panel(series=members, exogenous=exo, frequency=panel.frequency))
    return panels


def merge_panels(panels: Sequence[Panel]) -> Panel:
    """Union of disjoint panels; duplicate ids are rejected."""
    if not panels:
        raise ValueError("nothing to merge")
    frequency = panels[0].frequency
    series: dict[str, TimeSeries] = {}
    exogenous: ExogenousMap = {}
    for p in panels:
        if p.frequency != frequency:
            raise ValueError("cannot merge panels with different seasonal periods")
        for sid, ts in p.series.items():
            if sid in series:
                raise DuplicateError(sid, str(ts.start))
            series[sid] = ts
        for name, channel in p.exogenous.items():
            exogenous.setdefault(name, {}).update(channel)
    return Panel(series=series, exogenous=exogenous, frequency=frequency)
