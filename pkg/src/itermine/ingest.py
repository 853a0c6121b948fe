"""Parse profiler GPU-trace CSV exports into a :class:`NormalizedTrace`.

The expected layout is the one the vendor profiler writes with
``--print-gpu-trace --csv``::

    ==12345== NVPROF is profiling process 12345, command: python train.py
    "Start","Duration","Size","Throughput","Device","Stream","Name"
    ms,us,KB,GB/s,,,
    312.4800,1.2800,4.0960,3.0500,"GeForce GTX 1080 Ti (0)",14,"[CUDA memcpy HtoD]"

Comment lines start with ``==``. The row after the header is treated as a
units row when every nonempty cell is a unit token; otherwise times default
to microseconds and sizes to bytes. A cell may also carry its own unit
suffix (``312.48ms``), which overrides the column unit.
"""

from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal, InvalidOperation
from fractions import Fraction
from pathlib import Path
from typing import Iterator, Optional, Union

from .errors import MissingColumn, TooManyBadRows, TraceFormatError, UnreadableFile
from .model import NormalizedTrace, TraceRecord

logger = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("Start", "Duration", "Stream", "Name")
OPTIONAL_COLUMNS = ("Size", "Throughput", "Device")

TIME_UNITS = {"s": 10**9, "ms": 10**6, "us": 10**3, "µs": 10**3, "μs": 10**3, "ns": 1}
# Sizes are binary to match the profiler's reporting; rates are decimal.
SIZE_UNITS = {"B": 1, "KB": 1024, "MB": 1024**2, "GB": 1024**3}
RATE_UNITS = {"B/s": 1, "KB/s": 10**3, "MB/s": 10**6, "GB/s": 10**9}
UNIT_TOKENS = frozenset(TIME_UNITS) | frozenset(SIZE_UNITS) | frozenset(RATE_UNITS)

DEFAULT_TIME_UNIT = "us"
DEFAULT_SIZE_UNIT = "B"
DEFAULT_RATE_UNIT = "B/s"
MAX_BAD_ROW_FRACTION = 0.10
DEFAULT_DEVICE = "unknown"

_NUMBER = re.compile(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*(\S*)\s*$")


@dataclass
class IngestReport:
    rows_total: int = 0
    rows_parsed: int = 0
    rows_skipped: int = 0
    skip_reasons: list[tuple[int, str]] = field(default_factory=list)
    column_map: dict[str, int] = field(default_factory=dict)
    units: dict[str, str] = field(default_factory=dict)


class _BadCell(ValueError):
    pass


def _split_value(cell: str, column: str, table: dict) -> tuple[Decimal, int]:
    m = _NUMBER.match(cell)
    if m is None:
        raise _BadCell(f"{column}: unparseable value {cell!r}")
    number, suffix = m.groups()
    factor = None
    if suffix:
        factor = table.get(suffix)
        if factor is None:
            raise _BadCell(f"{column}: unknown unit {suffix!r}")
    try:
        return Decimal(number), factor
    except InvalidOperation:
        raise _BadCell(f"{column}: unparseable value {cell!r}") from None


def convert_scaled(cell: str, factor: int, column: str = "value", table: Optional[dict] = None) -> int:
    """Convert a decimal cell to an integer count of base units, rounding half up."""
    value, inline = _split_value(cell, column, table or {})
    scaled = value * (inline if inline is not None else factor)
    return int(scaled.to_integral_value(rounding=ROUND_HALF_UP))


def _convert_rate(cell: str, factor: int) -> Fraction:
    value, inline = _split_value(cell, "Throughput", RATE_UNITS)
    return Fraction(value) * (inline if inline is not None else factor)


def _is_units_row(row: list[str]) -> bool:
    cells = [c.strip() for c in row if c.strip()]
    return bool(cells) and all(c in UNIT_TOKENS for c in cells)


def _iter_lines(handle, lineno: list[int]) -> Iterator[str]:
    for number, line in enumerate(handle, start=1):
        if line.startswith("=="):
            continue
        if not line.strip():
            continue
        lineno[0] = number
        yield line


def _column_unit(units_row, index, table, default) -> tuple[str, int]:
    if units_row is not None and index is not None and index < len(units_row):
        token = units_row[index].strip()
        if token:
            if token not in table:
                raise TraceFormatError(f"unit {token!r} is not valid for this column")
            return token, table[token]
    return default, table[default]


def parse_trace(path: Union[str, Path]) -> tuple[NormalizedTrace, IngestReport]:
    """Read a GPU-trace CSV file.

    Returns the normalized trace (records sorted by ``(start, row)``) and an
    ingestion report. Rows with malformed cells are skipped and recorded in
    the report; more than 10% skipped rows raises :class:`TooManyBadRows`.
    """
    path = Path(path)
    report = IngestReport()
    records: list[TraceRecord] = []
    lineno = [0]
    try:
        with open(path, encoding="utf-8", newline="") as handle:
            reader = csv.reader(_iter_lines(handle, lineno))
            header = next(reader, None)
            if header is None:
                raise TraceFormatError(f"{path}: no header row")
            header = [h.strip() for h in header]
            col = {name: idx for idx, name in enumerate(header)}
            for name in REQUIRED_COLUMNS:
                if name not in col:
                    raise MissingColumn(name)
            report.column_map = {
                name: col[name] for name in REQUIRED_COLUMNS + OPTIONAL_COLUMNS if name in col
            }

            first = next(reader, None)
            first_line = lineno[0]
            units_row = None
            if first is not None and _is_units_row(first):
                units_row, first = first, None

            i_start, i_dur = col["Start"], col["Duration"]
            i_stream, i_name = col["Stream"], col["Name"]
            i_size, i_tput, i_dev = col.get("Size"), col.get("Throughput"), col.get("Device")
            t_start_unit, f_start = _column_unit(units_row, i_start, TIME_UNITS, DEFAULT_TIME_UNIT)
            t_dur_unit, f_dur = _column_unit(units_row, i_dur, TIME_UNITS, DEFAULT_TIME_UNIT)
            size_unit, f_size = _column_unit(units_row, i_size, SIZE_UNITS, DEFAULT_SIZE_UNIT)
            rate_unit, f_rate = _column_unit(units_row, i_tput, RATE_UNITS, DEFAULT_RATE_UNIT)
            report.units = {
                "Start": t_start_unit,
                "Duration": t_dur_unit,
                "Size": size_unit,
                "Throughput": rate_unit,
            }
            width = max(report.column_map.values()) + 1
            names: dict[str, str] = {}
            devices: dict[str, str] = {}

            def rows():
                if first is not None:
                    yield first_line, first
                for row in reader:
                    yield lineno[0], row

            for line, row in rows():
                report.rows_total += 1
                try:
                    if len(row) < width:
                        row = row + [""] * (width - len(row))
                    start = convert_scaled(row[i_start], f_start, "Start", TIME_UNITS)
                    duration = convert_scaled(row[i_dur], f_dur, "Duration", TIME_UNITS)
                    if duration < 0:
                        raise _BadCell(f"Duration: negative value {row[i_dur]!r}")
                    stream_cell = row[i_stream].strip()
                    if not stream_cell.isdigit():
                        raise _BadCell(f"Stream: not a stream id {stream_cell!r}")
                    name = row[i_name].strip()
                    if not name:
                        raise _BadCell("Name: empty operation name")
                    size = None
                    if i_size is not None and row[i_size].strip():
                        size = convert_scaled(row[i_size], f_size, "Size", SIZE_UNITS)
                        if size < 0:
                            raise _BadCell(f"Size: negative value {row[i_size]!r}")
                    throughput = None
                    if i_tput is not None and row[i_tput].strip():
                        throughput = _convert_rate(row[i_tput], f_rate)
                    device = DEFAULT_DEVICE
                    if i_dev is not None and row[i_dev].strip():
                        device = row[i_dev].strip()
                except _BadCell as exc:
                    report.rows_skipped += 1
                    report.skip_reasons.append((line, str(exc)))
                    continue
                # share string objects between the many repeated names
                name = names.setdefault(name, name)
                device = devices.setdefault(device, device)
                records.append(
                    TraceRecord(start, duration, size, throughput, device, int(stream_cell), name, line)
                )
    except (OSError, UnicodeDecodeError) as exc:
        raise UnreadableFile(f"{path}: {exc}") from exc
    except csv.Error as exc:
        raise TraceFormatError(f"{path}:{lineno[0]}: {exc}") from exc

    report.rows_parsed = len(records)
    if report.rows_skipped > MAX_BAD_ROW_FRACTION * report.rows_total:
        raise TooManyBadRows(report.rows_skipped, report.rows_total)

    warnings = []
    if report.rows_skipped:
        line, reason = report.skip_reasons[0]
        warnings.append(
            f"SkippedRows: {report.rows_skipped} of {report.rows_total} data rows skipped "
            f"(first at line {line}: {reason})"
        )
    origin = 0
    if records:
        lowest = min(r.start for r in records)
        if lowest < 0:
            origin = lowest
            records = [r._replace(start=r.start - origin) for r in records]
            warnings.append(f"NegativeStart: origin moved to {origin} ns")
    # file order is row order, so a stable sort on start gives (start, row)
    records.sort(key=lambda r: r.start)
    for w in warnings:
        logger.warning(w)
    return NormalizedTrace(records=records, origin=origin, warnings=warnings), report
