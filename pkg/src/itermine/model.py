"""Canonical in-memory GPU trace representation.

All times are integer nanoseconds measured from the trace origin and all
sizes are integer bytes. Nothing downstream of ingestion sees a unit.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple, Optional


class OpKind(enum.Enum):
    KERNEL = "Kernel"
    MEMCPY_HTOD = "MemcpyHtoD"
    MEMCPY_DTOH = "MemcpyDtoH"
    MEMCPY_DTOD = "MemcpyDtoD"
    MEMSET = "Memset"
    OTHER = "Other"

    @property
    def is_memcpy(self) -> bool:
        return self in _MEMCPY_KINDS


_MEMCPY_KINDS = frozenset({OpKind.MEMCPY_HTOD, OpKind.MEMCPY_DTOH, OpKind.MEMCPY_DTOD})

_COPY_MARKERS = (
    ("htod", OpKind.MEMCPY_HTOD),
    ("dtoh", OpKind.MEMCPY_DTOH),
    ("dtod", OpKind.MEMCPY_DTOD),
)


@lru_cache(maxsize=65536)
def _classify(name: str, has_throughput: bool) -> OpKind:
    lowered = name.lower()
    if "memcpy" in lowered:
        for marker, kind in _COPY_MARKERS:
            if marker in lowered:
                return kind
    if "memset" in lowered:
        return OpKind.MEMSET
    if not has_throughput:
        return OpKind.KERNEL
    return OpKind.OTHER


def classify_op_kind(name: str, throughput: Optional[Fraction] = None) -> OpKind:
    """Map an operation name (and whether it reports throughput) to its kind.

    Precedence is copy marker, then memset, then the throughput rule:
    computing kernels never report throughput while copies do. A name with
    throughput but no recognisable marker comes back as ``OpKind.OTHER``.
    """
    if not name:
        raise ValueError("operation name must be nonempty")
    return _classify(name, throughput is not None)


class TraceRecord(NamedTuple):
    """One GPU operation row."""

    start: int
    duration: int
    size: Optional[int]
    throughput: Optional[Fraction]
    device: str
    stream: int
    name: str
    row: int

    def end(self) -> int:
        return self.start + self.duration

    @property
    def kind(self) -> OpKind:
        return _classify(self.name, self.throughput is not None)


def record_end(record: TraceRecord) -> int:
    return record.start + record.duration


@dataclass(frozen=True)
class NormalizedTrace:
    records: list[TraceRecord]
    origin: int = 0
    warnings: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    @classmethod
    def from_records(cls, records, origin: int = 0, warnings=None) -> "NormalizedTrace":
        """Build a trace, sorting records by ``(start, row)``."""
        ordered = sorted(records, key=lambda r: (r.start, r.row))
        return cls(records=ordered, origin=origin, warnings=list(warnings or []))
