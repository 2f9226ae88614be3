# License: MIT
# Copyright © 2024 Frequenz Energy-as-a-Service GmbH

"""Hourly sales records and the replicated (hour, day class) panel built from them.

# Records

A [`SalesRecord`][frequenz.gradient_sampling.panel.SalesRecord] is the number of units
of one product sold during one opening hour of one calendar day. Hours are stored as
1-based indices from the store's opening: with the default opening hour of 6, the
wall-clock hour 6 (6am to 7am) becomes `hour=1`, 7am becomes `hour=2` and so on.

Records are usually read from a CSV stream with
[`parse_csv()`][frequenz.gradient_sampling.panel.parse_csv]. The column names and the
opening hour are described by a [`CsvSchema`][frequenz.gradient_sampling.panel.CsvSchema]:

```python
from frequenz.gradient_sampling.panel import CsvSchema, parse_csv

records = parse_csv(b"date,hour,qty\\n2012-11-07,6,12\\n", CsvSchema())
assert records[0].hour == 1
assert records[0].quantity == 12.0
```

# Panels

A [`SalesPanel`][frequenz.gradient_sampling.panel.SalesPanel] groups the quantities by
cell `(t, j)`, where `t` is the hour index and `j` the day class (the ISO day of the
week by default). All replicates of a cell are kept, in input order, and the whole panel
is also available as a flat observation vector ordered by day class, hour and
replicate. Optimizers work on that flat vector.

```python
from frequenz.gradient_sampling.panel import build_panel

panel = build_panel(records, T=17)
assert panel.count(1, 3) == 1  # 2012-11-07 was a Wednesday
```

Panels can also be simulated with
[`generate_synthetic()`][frequenz.gradient_sampling.panel.generate_synthetic].
"""

from __future__ import annotations

import dataclasses
import datetime
import io
import logging
import math
import os
from collections.abc import Callable, Iterable, Mapping, Sequence
from enum import Enum
from types import MappingProxyType
from typing import IO, Any

import numpy as np
import pandas as pd

from ._exceptions import (
    DataError,
    PanelError,
    RowError,
    SchemaError,
    UnsupportedDistributionError,
)
from ._generic import CellKey, FloatArray, IntArray

_logger = logging.getLogger(__name__)

DEFAULT_START_DATE: datetime.date = datetime.date(2012, 11, 5)
"""The first date of simulated data (a Monday, so day classes map to weekdays)."""


def iso_day_class(date: datetime.date) -> int:
    """Return the ISO day of the week of a date (Monday is 1, Sunday is 7).

    This is the default day class function.

    Args:
        date: The date to classify.

    Returns:
        The ISO day of the week.
    """
    return date.isoweekday()


@dataclasses.dataclass(frozen=True)
class SalesRecord:
    """The units sold during one opening hour of one day."""

    date: datetime.date
    """The calendar date of the sales."""

    hour: int
    """The 1-based hour index, counted from the opening hour."""

    quantity: float
    """The number of units sold."""

    def __post_init__(self) -> None:
        """Validate the record.

        Raises:
            ValueError: If the hour index is smaller than 1 or the quantity is
                negative or not finite.
        """
        if self.hour < 1:
            raise ValueError(f"hour index must be at least 1, not {self.hour}")
        if not math.isfinite(self.quantity):
            raise ValueError(f"quantity must be finite, not {self.quantity}")
        if self.quantity < 0:
            raise ValueError(f"quantity must be non-negative, not {self.quantity}")


@dataclasses.dataclass(frozen=True)
class CsvSchema:
    """How to find sales records in a CSV stream."""

    date: str = "date"
    """The name of the column holding ISO-8601 (`YYYY-MM-DD`) dates."""

    hour: str = "hour"
    """The name of the column holding the wall-clock hour."""

    quantity: str = "qty"
    """The name of the column holding the units sold."""

    opening_hour: int = 6
    """The wall-clock hour that is mapped to the hour index 1."""

    def __post_init__(self) -> None:
        """Validate the schema.

        Raises:
            ValueError: If two columns share a name or the opening hour is not
                a valid hour of the day.
        """
        if len({self.date, self.hour, self.quantity}) != 3:
            raise ValueError("date, hour and quantity columns must be different")
        if not 0 <= self.opening_hour <= 23:
            raise ValueError(
                f"opening_hour must be in [0, 23], not {self.opening_hour}"
            )

    @property
    def columns(self) -> tuple[str, str, str]:
        """The date, hour and quantity column names."""
        return (self.date, self.hour, self.quantity)


def parse_csv(
    source: bytes | IO[bytes], schema: CsvSchema = CsvSchema()
) -> list[SalesRecord]:
    """Read sales records from an UTF-8 CSV stream with a header row.

    Each data row becomes one record. Rows that can't be parsed are never dropped:
    the first of them aborts the parsing with a
    [`RowError`][frequenz.gradient_sampling.RowError] carrying its line number.

    Args:
        source: The CSV content, or a binary stream to read it from.
        schema: The columns to read and the opening hour.

    Returns:
        The records, in input order.

    Raises:
        SchemaError: If the stream has no header or a configured column is missing.
        DataError: If the stream is not valid UTF-8 CSV.
    """
    stream = io.BytesIO(source) if isinstance(source, bytes) else source
    try:
        frame = pd.read_csv(
            stream,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=False,
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError as exc:
        raise SchemaError("The CSV stream has no header row") from exc
    except (UnicodeDecodeError, pd.errors.ParserError) as exc:
        raise DataError(f"The CSV stream can't be read: {exc}") from exc

    for column in schema.columns:
        if column not in frame.columns:
            raise SchemaError(f"The CSV header has no column {column!r}", column)

    records: list[SalesRecord] = []
    raw_rows = frame[list(schema.columns)].to_numpy(dtype=object)
    for offset, raw in enumerate(raw_rows):
        # The header is line 1 and there is one physical line per row.
        row = {
            column: value if isinstance(value, str) else ""
            for column, value in zip(schema.columns, raw)
        }
        records.append(_parse_row(row, offset + 2, schema))

    _logger.debug("Parsed %d sales records", len(records))
    return records


def _parse_row(
    row: Mapping[str, str], line_number: int, schema: CsvSchema
) -> SalesRecord:
    """Turn a raw CSV row into a record.

    Args:
        row: The raw row.
        line_number: The line of the row in the stream.
        schema: The schema of the stream.

    Returns:
        The parsed record.

    Raises:
        RowError: If a field can't be parsed or the record is invalid.
    """
    try:
        date = datetime.date.fromisoformat(row[schema.date].strip())
    except ValueError as exc:
        raise RowError(f"invalid date {row[schema.date]!r}", line_number, row) from exc
    try:
        wall_clock_hour = int(row[schema.hour].strip())
    except ValueError as exc:
        raise RowError(f"invalid hour {row[schema.hour]!r}", line_number, row) from exc
    try:
        quantity = float(row[schema.quantity].strip())
    except ValueError as exc:
        raise RowError(
            f"invalid quantity {row[schema.quantity]!r}", line_number, row
        ) from exc

    if wall_clock_hour < schema.opening_hour:
        raise RowError(
            f"hour {wall_clock_hour} is before the opening hour {schema.opening_hour}",
            line_number,
            row,
        )
    if quantity < 0:
        raise RowError(f"negative quantity {quantity}", line_number, row)
    try:
        return SalesRecord(
            date=date,
            hour=wall_clock_hour - schema.opening_hour + 1,
            quantity=quantity,
        )
    except ValueError as exc:
        raise RowError(str(exc), line_number, row) from exc


class SalesPanel:
    """Replicated sales observations indexed by hour and day class.

    The panel has `T` hours per day and `J` day classes. Cell `(t, j)` holds the
    `n_tj` replicates observed at hour `t` of days of class `j`, in input order.
    Cells without observations are allowed, they just don't contribute anything.

    The observations are also laid out as a flat vector of length `n`, ordered by day
    class, then hour, then replicate. [`position()`][frequenz.gradient_sampling.panel.SalesPanel.position]
    and [`locate()`][frequenz.gradient_sampling.panel.SalesPanel.locate] convert between
    the `(t, j, i)` triples (all 1-based) and 0-based flat positions.

    Panels are immutable, all the arrays they expose are read-only.
    """

    def __init__(
        self, T: int, J: int, cells: Mapping[CellKey, Sequence[float]]
    ) -> None:
        """Initialize this panel.

        Args:
            T: The number of hours per day.
            J: The number of day classes.
            cells: The replicates of each `(hour, day class)` cell.

        Raises:
            ValueError: If the dimensions are not positive or a cell lies outside
                the `T` x `J` grid.
        """
        if T < 1 or J < 1:
            raise ValueError(f"panel dimensions must be positive, not {T}x{J}")
        for t, j in cells:
            if not (1 <= t <= T and 1 <= j <= J):
                raise ValueError(f"cell {(t, j)} is outside the {T}x{J} grid")

        self._T: int = T
        self._J: int = J

        keys = sorted(
            (key for key, replicates in cells.items() if len(replicates) > 0),
            key=lambda key: (key[1], key[0]),
        )
        self._cells: Mapping[CellKey, tuple[float, ...]] = MappingProxyType(
            {key: tuple(float(value) for value in cells[key]) for key in keys}
        )
        """The replicates of each non-empty cell, in flat order."""

        self._cell_keys: tuple[CellKey, ...] = tuple(keys)
        """The non-empty cells, in flat order."""

        counts = [len(self._cells[key]) for key in keys]
        starts = np.cumsum([0, *counts[:-1]]).astype(int).tolist()
        self._offsets: dict[CellKey, int] = dict(zip(keys, starts))
        """The flat position of the first replicate of each cell."""

        self._values: FloatArray = _frozen(
            np.array(
                [value for key in keys for value in self._cells[key]], dtype=np.float64
            )
        )
        self._hours: IntArray = _frozen(
            np.repeat(np.array([t for t, _ in keys], dtype=np.int64), counts)
        )
        self._days: IntArray = _frozen(
            np.repeat(np.array([j for _, j in keys], dtype=np.int64), counts)
        )
        self._cell_ids: IntArray = _frozen(
            np.repeat(np.arange(len(keys), dtype=np.int64), counts)
        )

    @property
    def T(self) -> int:
        """The number of hours per day."""
        return self._T

    @property
    def J(self) -> int:
        """The number of day classes."""
        return self._J

    @property
    def n(self) -> int:
        """The total number of observations."""
        return len(self._values)

    @property
    def cells(self) -> Mapping[CellKey, tuple[float, ...]]:
        """The replicates of each non-empty `(hour, day class)` cell."""
        return self._cells

    @property
    def cell_keys(self) -> tuple[CellKey, ...]:
        """The non-empty cells, in flat order."""
        return self._cell_keys

    @property
    def values(self) -> FloatArray:
        """The flat observation vector."""
        return self._values

    @property
    def hours(self) -> IntArray:
        """The hour index of each flat observation."""
        return self._hours

    @property
    def days(self) -> IntArray:
        """The day class of each flat observation."""
        return self._days

    @property
    def cell_ids(self) -> IntArray:
        """The index in `cell_keys` of the cell of each flat observation."""
        return self._cell_ids

    @property
    def day_classes(self) -> tuple[int, ...]:
        """The day classes with at least one observation, sorted."""
        return tuple(sorted({j for _, j in self._cell_keys}))

    def count(self, t: int, j: int) -> int:
        """Return the number of replicates of a cell.

        Args:
            t: The hour index.
            j: The day class.

        Returns:
            The number of replicates, 0 for cells without observations.
        """
        return len(self._cells.get((t, j), ()))

    def position(self, t: int, j: int, i: int) -> int:
        """Return the flat position of a replicate.

        Args:
            t: The hour index.
            j: The day class.
            i: The 1-based replicate index within the cell.

        Returns:
            The 0-based position in the flat observation vector.

        Raises:
            IndexError: If the panel has no such replicate.
        """
        if not 1 <= i <= self.count(t, j):
            raise IndexError(f"cell {(t, j)} has no replicate {i}")
        return self._offsets[(t, j)] + i - 1

    def locate(self, position: int) -> tuple[int, int, int]:
        """Return the `(t, j, i)` triple of a flat position.

        Args:
            position: The 0-based position in the flat observation vector.

        Returns:
            The hour index, day class and 1-based replicate index.

        Raises:
            IndexError: If the position is out of range.
        """
        if not 0 <= position < self.n:
            raise IndexError(f"position {position} is out of range [0, {self.n})")
        key = self._cell_keys[int(self._cell_ids[position])]
        return key[0], key[1], position - self._offsets[key] + 1

    def __len__(self) -> int:
        """Return the total number of observations."""
        return self.n

    def __str__(self) -> str:
        """Return a string representation of this panel."""
        return f"{type(self).__name__}({self._T}x{self._J}, n={self.n})"

    def __repr__(self) -> str:
        """Return a string representation of this panel."""
        return (
            f"{type(self).__name__}(T={self._T!r}, J={self._J!r}):<"
            f"cells={len(self._cell_keys)!r}, n={self.n!r}>"
        )


def _frozen(array: np.ndarray[Any, Any]) -> Any:
    """Mark an array as read-only and return it."""
    array.flags.writeable = False
    return array


def build_panel(
    records: Iterable[SalesRecord],
    T: int,
    day_class_fn: Callable[[datetime.date], int] = iso_day_class,
    *,
    J: int = 7,
) -> SalesPanel:
    """Group sales records into a panel.

    Args:
        records: The records to group.
        T: The number of hours per day.
        day_class_fn: The function giving the day class (in `[1, J]`) of a date.
        J: The number of day classes.

    Returns:
        The panel, with the replicates of each cell in input order.

    Raises:
        PanelError: If a record's hour is larger than `T` or its day class is
            outside `[1, J]`.
    """
    cells: dict[CellKey, list[float]] = {}
    for record in records:
        if record.hour > T:
            raise PanelError(f"hour index is larger than T={T}", record)
        j = day_class_fn(record.date)
        if not 1 <= j <= J:
            raise PanelError(f"day class {j} is outside [1, {J}]", record)
        cells.setdefault((record.hour, j), []).append(record.quantity)
    panel = SalesPanel(T, J, cells)
    _logger.debug("Built %s", panel)
    return panel


class Distribution(Enum):
    """The distributions synthetic sales can be drawn from."""

    NORMAL = "normal"
    """Normal with the cell's mean and standard deviation."""

    LOGNORMAL = "lognormal"
    """Log-normal with the cell's mean and standard deviation (on the data scale)."""

    POISSON = "poisson"
    """Poisson with the cell's mean (the standard deviation is ignored)."""

    @classmethod
    def parse(cls, tag: str | Distribution) -> Distribution:
        """Return the distribution with a given tag.

        Args:
            tag: The tag (case insensitive) or a distribution.

        Returns:
            The distribution.

        Raises:
            UnsupportedDistributionError: If the tag is not known.
        """
        if isinstance(tag, Distribution):
            return tag
        try:
            return cls(tag.strip().lower())
        except ValueError as exc:
            raise UnsupportedDistributionError(tag) from exc


CellFunction = Callable[[int, int], float]
"""A deterministic function of a cell `(t, j)`."""


def seasonal_profile(
    base: float, amplitude: float = 0.0, day_shift: float = 0.0, *, T: int = 17
) -> CellFunction:
    """Return the mean profile `base + amplitude·sin(2πt/T) + day_shift·j`.

    Args:
        base: The overall level.
        amplitude: The amplitude of the intraday sine wave.
        day_shift: The increment between consecutive day classes.
        T: The period of the sine wave, in hours.

    Returns:
        The profile, as a function of `(t, j)`.
    """

    def profile(t: int, j: int) -> float:
        return base + amplitude * math.sin(2.0 * math.pi * t / T) + day_shift * j

    return profile


@dataclasses.dataclass(frozen=True)
class SyntheticSpec:
    """How to simulate a sales panel."""

    T: int = 17
    """The number of hours per day."""

    J: int = 7
    """The number of day classes."""

    replicates: int = 20
    """The number of replicates drawn for each cell."""

    mean_fn: CellFunction = seasonal_profile(10.0)
    """The mean of each cell."""

    sd_fn: CellFunction = seasonal_profile(1.0)
    """The standard deviation of each cell."""

    distribution: Distribution = Distribution.NORMAL
    """The distribution of the draws."""

    seed: int = 0
    """The seed of the random generator."""

    def __post_init__(self) -> None:
        """Validate the simulation settings.

        Raises:
            ValueError: If a dimension or the number of replicates is not positive.
        """
        if self.T < 1 or self.J < 1:
            raise ValueError(
                f"panel dimensions must be positive, not {self.T}x{self.J}"
            )
        if self.replicates < 1:
            raise ValueError(f"replicates must be at least 1, not {self.replicates}")
        object.__setattr__(self, "distribution", Distribution.parse(self.distribution))


def _draw(
    rng: np.random.Generator,
    distribution: Distribution,
    mean: float,
    sd: float,
    size: int,
) -> FloatArray:
    """Draw i.i.d. values with a given mean and standard deviation.

    Args:
        rng: The random generator.
        distribution: The distribution family.
        mean: The mean of the draws.
        sd: The standard deviation of the draws.
        size: The number of draws.

    Returns:
        The draws.

    Raises:
        ValueError: If the moments are not valid for the distribution.
    """
    if sd < 0:
        raise ValueError(f"standard deviation must be non-negative, not {sd}")
    match distribution:
        case Distribution.NORMAL:
            return rng.normal(mean, sd, size)
        case Distribution.LOGNORMAL:
            if mean <= 0:
                raise ValueError(f"log-normal draws need a positive mean, not {mean}")
            sigma2 = math.log1p((sd / mean) ** 2)
            return rng.lognormal(math.log(mean) - sigma2 / 2.0, math.sqrt(sigma2), size)
        case Distribution.POISSON:
            if mean < 0:
                raise ValueError(f"Poisson draws need a non-negative mean, not {mean}")
            return rng.poisson(mean, size).astype(np.float64)
    raise UnsupportedDistributionError(str(distribution))


def generate_synthetic(spec: SyntheticSpec) -> SalesPanel:
    """Simulate a panel with i.i.d. replicates in every cell.

    Cells are drawn in flat order (day class, then hour) from a generator seeded with
    `spec.seed`, so equal settings give equal panels.

    Args:
        spec: What to simulate.

    Returns:
        The simulated panel.
    """
    rng = np.random.default_rng(spec.seed)
    cells: dict[CellKey, list[float]] = {}
    for j in range(1, spec.J + 1):
        for t in range(1, spec.T + 1):
            draws = _draw(
                rng,
                spec.distribution,
                spec.mean_fn(t, j),
                spec.sd_fn(t, j),
                spec.replicates,
            )
            cells[(t, j)] = draws.tolist()
    return SalesPanel(spec.T, spec.J, cells)


def generate_synthetic_records(  # pylint: disable=too-many-arguments
    days: int,
    T: int,
    mean_fn: CellFunction,
    sd_fn: CellFunction,
    *,
    distribution: Distribution = Distribution.NORMAL,
    seed: int = 0,
    start: datetime.date = DEFAULT_START_DATE,
    day_class_fn: Callable[[datetime.date], int] = iso_day_class,
) -> list[SalesRecord]:
    """Simulate one observation per hour of consecutive calendar days.

    Negative draws are clipped to 0, as sales can't be negative.

    Args:
        days: The number of consecutive days.
        T: The number of hours per day.
        mean_fn: The mean of each `(t, j)` cell.
        sd_fn: The standard deviation of each `(t, j)` cell.
        distribution: The distribution of the draws.
        seed: The seed of the random generator.
        start: The first simulated date.
        day_class_fn: The function giving the day class of a date.

    Returns:
        The records, ordered by date and hour.
    """
    rng = np.random.default_rng(seed)
    records: list[SalesRecord] = []
    for offset in range(days):
        date = start + datetime.timedelta(days=offset)
        j = day_class_fn(date)
        for t in range(1, T + 1):
            value = float(_draw(rng, distribution, mean_fn(t, j), sd_fn(t, j), 1)[0])
            records.append(SalesRecord(date=date, hour=t, quantity=max(value, 0.0)))
    return records


def panel_to_records(
    panel: SalesPanel, start: datetime.date = DEFAULT_START_DATE
) -> list[SalesRecord]:
    """Lay a weekly panel out on the calendar.

    Replicate `i` of day class `j` is dated `start + 7·(i-1) + (j-1)` days, so with
    a Monday as `start` the ISO day of the week of every date is its day class.

    Args:
        panel: A panel with 7 day classes.
        start: The date of replicate 1 of day class 1.

    Returns:
        The records, ordered by date and hour.

    Raises:
        ValueError: If the panel doesn't have 7 day classes.
        PanelError: If a value can't be a sales quantity (it is negative).
    """
    if panel.J != 7:
        raise ValueError(f"only weekly panels can be dated, this one has J={panel.J}")
    records: list[SalesRecord] = []
    for (t, j), replicates in panel.cells.items():
        for i, value in enumerate(replicates):
            date = start + datetime.timedelta(days=7 * i + j - 1)
            try:
                records.append(SalesRecord(date=date, hour=t, quantity=value))
            except ValueError as exc:
                raise PanelError(str(exc), (t, j, i + 1)) from exc
    records.sort(key=lambda record: (record.date, record.hour))
    return records


def write_records_csv(
    records: Iterable[SalesRecord],
    target: str | os.PathLike[str] | IO[str],
    schema: CsvSchema = CsvSchema(),
) -> None:
    """Write sales records as CSV that `parse_csv()` can read back.

    Integral quantities are written without a decimal part, other quantities with
    the shortest representation that reads back to the same float.

    Args:
        records: The records to write.
        target: The path or text stream to write to.
        schema: The columns to write and the opening hour.
    """
    frame = pd.DataFrame(_records_columns(records, schema), dtype=str)
    frame.to_csv(target, index=False, lineterminator="\n")


def _records_columns(
    records: Iterable[SalesRecord], schema: CsvSchema
) -> dict[str, list[str]]:
    """Format records as CSV columns.

    Args:
        records: The records to format.
        schema: The columns to write and the opening hour.

    Returns:
        The formatted columns.
    """
    columns: dict[str, list[str]] = {column: [] for column in schema.columns}
    for record in records:
        columns[schema.date].append(record.date.isoformat())
        columns[schema.hour].append(str(record.hour + schema.opening_hour - 1))
        quantity = record.quantity
        columns[schema.quantity].append(
            str(int(quantity)) if quantity.is_integer() else repr(quantity)
        )
    return columns
