"""Iteration-level timing metrics over matched pattern occurrences.

Each match span becomes one iteration. Between consecutive iterations lies
an *interval*: the main stream is idle, waiting on host-side work or on
host-to-device copies. The fraction of that interval covered by HtoD copy
activity is the iteration's *overlap*.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import NoIterations
from .matching import MatchSpan
from .model import NormalizedTrace, OpKind, TraceRecord
from .streams import TokenSequence


@dataclass(frozen=True)
class Partition:
    span: MatchSpan
    t_start: int
    t_end: int


@dataclass(frozen=True)
class IterationMetrics:
    index: int
    span: MatchSpan
    t_start: int
    t_end: int
    interval_ns: Optional[int]
    overlap_ratio: Optional[float]
    htod_bytes: int
    op_gap_mean_ns: float
    extra_ops: int
    clamped_gaps: int = 0

    @property
    def duration_ns(self) -> int:
        return self.t_end - self.t_start


@dataclass(frozen=True)
class SummaryMetrics:
    avg_interval_ns: int
    max_interval_ns: int
    avg_overlap: float
    avg_operation_ns: int
    avg_size_bytes: int
    iterations_found: int
    iterations_declared: Optional[int]
    insufficient_iterations: bool = False


def round_half_up(x) -> int:
    if isinstance(x, Fraction):
        return math.floor(x + Fraction(1, 2))
    return math.floor(x + 0.5)


def partition_iterations(
    trace: NormalizedTrace, seq: TokenSequence, spans: Sequence[MatchSpan]
) -> list[Partition]:
    """Map token spans to wall-clock windows on the main stream."""
    recs = trace.records
    idx = seq.record_index
    parts = []
    for sp in spans:
        first = recs[idx[sp.start_token]]
        last = recs[idx[sp.end_token]]
        parts.append(Partition(sp, first.start, last.start + last.duration))
    parts.sort(key=lambda p: (p.t_start, p.span.start_token))
    return parts


def htod_records(trace: NormalizedTrace) -> list[TraceRecord]:
    """All host-to-device copies, on any stream."""
    return [r for r in trace.records if r.kind is OpKind.MEMCPY_HTOD]


def _merge_segments(records: Sequence[TraceRecord]) -> tuple[np.ndarray, np.ndarray]:
    segs = sorted((r.start, r.start + r.duration) for r in records if r.duration > 0)
    starts: list[int] = []
    ends: list[int] = []
    for s, e in segs:
        if ends and s <= ends[-1]:
            if e > ends[-1]:
                ends[-1] = e
        else:
            starts.append(s)
            ends.append(e)
    return np.asarray(starts, dtype=np.int64), np.asarray(ends, dtype=np.int64)


def covered_time(lo: np.ndarray, hi: np.ndarray, seg_start: np.ndarray, seg_end: np.ndarray) -> np.ndarray:
    """Length of ``[lo, hi]`` covered by disjoint sorted segments, per window."""
    out = np.zeros(len(lo), dtype=np.int64)
    if len(seg_start) == 0 or len(lo) == 0:
        return out
    cum = np.concatenate(([0], np.cumsum(seg_end - seg_start)))
    first = np.searchsorted(seg_end, lo, side="right")
    stop = np.searchsorted(seg_start, hi, side="left")
    has = first < stop
    f, s = first[has], stop[has]
    total = cum[s] - cum[f]
    total -= np.maximum(0, lo[has] - seg_start[f])
    total -= np.maximum(0, seg_end[s - 1] - hi[has])
    out[has] = total
    return out


def compute_iteration_metrics(
    trace: NormalizedTrace,
    partitions: Sequence[Partition],
    copy_records: Sequence[TraceRecord],
    seq: TokenSequence,
) -> list[IterationMetrics]:
    """Per-iteration interval, overlap, attributed HtoD bytes and dispatch gap.

    * interval: ``t_start(k) - t_end(k-1)``, absent for the first iteration;
    * overlap: time in that interval covered by the union of HtoD copies,
      divided by the interval (absent when the interval is zero);
    * htod bytes: sizes of HtoD copies starting in ``(t_end(k-1), t_end(k)]``,
      with the first window starting at time 0 inclusive;
    * op gap: mean idle time between consecutive main-stream operations
      inside the span, negative gaps clamped to zero.
    """
    if not partitions:
        return []
    n = len(partitions)
    t_start = np.fromiter((p.t_start for p in partitions), dtype=np.int64, count=n)
    t_end = np.fromiter((p.t_end for p in partitions), dtype=np.int64, count=n)

    prev_end = np.concatenate(([0], t_end[:-1]))
    raw_interval = t_start - prev_end
    interval = np.maximum(raw_interval, 0)

    seg_start, seg_end = _merge_segments(copy_records)
    covered = covered_time(prev_end, t_start, seg_start, seg_end)

    copies = sorted(((r.start, r.size or 0) for r in copy_records))
    c_start = np.asarray([c[0] for c in copies], dtype=np.int64)
    c_cum = np.concatenate(([0], np.cumsum(np.asarray([c[1] for c in copies], dtype=np.int64))))
    window_lo = prev_end.copy()
    window_lo[0] = -1
    byte_hi = np.searchsorted(c_start, t_end, side="right")
    byte_lo = np.searchsorted(c_start, window_lo, side="right")
    htod = c_cum[byte_hi] - c_cum[byte_lo]

    recs = trace.records
    ridx = seq.record_index
    main_start = np.fromiter((recs[i].start for i in ridx), dtype=np.int64, count=len(ridx))
    main_end = np.fromiter((recs[i].start + recs[i].duration for i in ridx), dtype=np.int64, count=len(ridx))
    gaps = main_start[1:] - main_end[:-1]
    gap_cum = np.concatenate(([0], np.cumsum(np.maximum(gaps, 0))))
    neg_cum = np.concatenate(([0], np.cumsum(gaps < 0)))

    out = []
    for k, p in enumerate(partitions):
        s, e = p.span.start_token, p.span.end_token
        n_gaps = e - s
        gap_mean = float(gap_cum[e] - gap_cum[s]) / n_gaps if n_gaps else 0.0
        if k == 0:
            iv, ov = None, None
        else:
            iv = int(interval[k])
            ov = float(covered[k]) / iv if iv > 0 else None
        out.append(
            IterationMetrics(
                index=k + 1,
                span=p.span,
                t_start=p.t_start,
                t_end=p.t_end,
                interval_ns=iv,
                overlap_ratio=ov,
                htod_bytes=int(htod[k]),
                op_gap_mean_ns=gap_mean,
                extra_ops=p.span.extra,
                clamped_gaps=int(neg_cum[e] - neg_cum[s]) + (1 if k and raw_interval[k] < 0 else 0),
            )
        )
    return out


def compute_summary(items: Sequence[IterationMetrics], declared: Optional[int] = None) -> SummaryMetrics:
    """Aggregate per-iteration metrics.

    Interval and overlap averages run over iterations 2..n. With a single
    iteration those fields are zero and ``insufficient_iterations`` is set.
    Times and sizes are rounded half up to integers, ratios to 6 places.
    """
    if not items:
        raise NoIterations("no iterations were matched")
    intervals = [m.interval_ns for m in items if m.interval_ns is not None]
    overlaps = [m.overlap_ratio for m in items if m.overlap_ratio is not None]
    avg_interval = round_half_up(Fraction(sum(intervals), len(intervals))) if intervals else 0
    max_interval = max(intervals) if intervals else 0
    avg_overlap = round(math.fsum(overlaps) / len(overlaps), 6) if overlaps else 0.0
    avg_op = round_half_up(math.fsum(m.op_gap_mean_ns for m in items) / len(items))
    avg_size = round_half_up(Fraction(sum(m.htod_bytes for m in items), len(items)))
    return SummaryMetrics(
        avg_interval_ns=avg_interval,
        max_interval_ns=max_interval,
        avg_overlap=avg_overlap,
        avg_operation_ns=avg_op,
        avg_size_bytes=avg_size,
        iterations_found=len(items),
        iterations_declared=declared,
        insufficient_iterations=len(items) < 2,
    )
