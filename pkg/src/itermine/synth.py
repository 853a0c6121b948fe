"""Synthetic GPU traces with planted iterations and a ground-truth sidecar.

The emitted trace mimics a single-GPU training run:

* stream 13 (main): setup kernels, then ``iterations`` repeats of a fixed
  kernel sequence. Some iterations also run extra "statistics" kernels,
  after the iteration body or (``insert_mode="mixed"``) partly inside it.
* stream 14: one host-to-device copy before every iteration, finishing
  exactly when the iteration starts.
* stream 15: one device-to-host copy after every iteration.
* stream 7: a memset and a small host-to-device copy at time zero.

Everything the generator plants (pattern, token spans, intervals, copy
bytes, expected summary and diagnosis) goes into the sidecar so an
analysis can be checked against it.
"""

from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence, Union

from .errors import InvalidConfig, OutputError

MAIN_STREAM = 13
HTOD_STREAM = 14
DTOH_STREAM = 15
ASSIST_STREAM = 7
DEVICE = "GeForce GTX 1080 Ti (0)"
MAIN_START_NS = 5_000
DTOH_BYTES = 256
ASSIST_BYTES = 4_096

PATHOLOGIES = ("none", "graph_growth", "oversize_copy")
# trailing: extra kernels run after the iteration body
# mixed: one runs after the body, the rest are interleaved inside it
INSERT_MODES = ("trailing", "mixed")

# defaults the expected diagnosis is computed with
THETA_COPY = 0.10
THETA_CPU = 10.0


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    init_ops: int = 8
    pattern_len: int = 12
    iterations: int = 100
    vocab_size: int = 32
    insert_prob: float = 0.0
    max_inserts: int = 0
    kernel_duration_ns: int = 20_000
    kernel_jitter_ns: int = 2_000
    intra_gap_ns: int = 5_000
    intra_jitter_ns: int = 500
    interval_gap_ns: int = 10_000
    interval_jitter_ns: int = 1_000
    htod_bytes_per_iter: int = 1_000
    htod_bandwidth_bytes_per_s: int = 10_000_000_000
    pathology: str = "none"
    pathology_factor: float = 1.0
    insert_mode: str = "trailing"

    def validate(self) -> None:
        problems = []
        if self.pattern_len < 1:
            problems.append("pattern_len must be >= 1")
        if self.iterations < 2:
            problems.append("iterations must be >= 2")
        if self.max_inserts < 0:
            problems.append("max_inserts must be >= 0")
        if self.init_ops < 0:
            problems.append("init_ops must be >= 0")
        if self.vocab_size < self.pattern_len:
            problems.append(f"vocab_size ({self.vocab_size}) must be >= pattern_len ({self.pattern_len})")
        elif self.insert_prob > 0 and self.max_inserts > 0 and self.vocab_size == self.pattern_len:
            problems.append("insertions need vocab_size > pattern_len (inserted names come from outside the pattern)")
        if not 0.0 <= self.insert_prob <= 1.0:
            problems.append("insert_prob must lie in [0, 1]")
        for base, jitter in (
            ("kernel_duration_ns", "kernel_jitter_ns"),
            ("intra_gap_ns", "intra_jitter_ns"),
            ("interval_gap_ns", "interval_jitter_ns"),
        ):
            b, j = getattr(self, base), getattr(self, jitter)
            if b < 0 or j < 0 or j > b:
                problems.append(f"need 0 <= {jitter} <= {base}")
        if self.kernel_duration_ns - self.kernel_jitter_ns < 1:
            problems.append("kernels must last at least 1 ns")
        if self.htod_bytes_per_iter < 1 or self.htod_bandwidth_bytes_per_s < 1:
            problems.append("htod_bytes_per_iter and htod_bandwidth_bytes_per_s must be positive")
        if self.insert_mode not in INSERT_MODES:
            problems.append(f"insert_mode must be one of {INSERT_MODES}")
        if self.pathology not in PATHOLOGIES:
            problems.append(f"pathology must be one of {PATHOLOGIES}")
        if not self.pathology_factor > 0:
            problems.append("pathology_factor must be positive")
        if problems:
            raise InvalidConfig("; ".join(problems))

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "SynthConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise InvalidConfig(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)


@dataclass
class GroundTruth:
    pattern_names: list[str]
    spans: list[tuple[int, int, int]]
    intervals_ns: list[Optional[int]]
    overlaps: list[Optional[float]]
    htod_bytes: list[int]
    op_gap_mean_ns: list[float]
    expected_summary: dict
    expected_diagnosis: str
    streams: dict = field(default_factory=dict)
    main_ops: int = 0
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["spans"] = [list(s) for s in self.spans]
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "GroundTruth":
        d = dict(d)
        d["spans"] = [tuple(s) for s in d["spans"]]
        return cls(**d)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "GroundTruth":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _half_up(x) -> int:
    return math.floor(Fraction(x) + Fraction(1, 2))


def kernel_name(v: int) -> str:
    return f"void fused_op_{v}<float, {64 << (v % 3)}>(float const*, float*)"


def _fmt_us(ns: int) -> str:
    return f"{ns // 1000}.{ns % 1000:03d}"


def _throughput(size: int, duration: int) -> str:
    return f"{size / max(duration, 1):.4f}"  # bytes per ns == GB/s


class _Timeline:
    """Collects trace rows; main-stream ops are also kept in token order."""

    def __init__(self):
        self.rows: list[tuple] = []
        self.main: list[tuple[int, int, str]] = []

    def op(self, stream: int, start: int, duration: int, name: str, size: Optional[int] = None) -> int:
        self.rows.append((start, stream, duration, size, name))
        if stream == MAIN_STREAM:
            self.main.append((start, duration, name))
        return start + duration


def _plan(cfg: SynthConfig):
    rng = random.Random(cfg.seed)

    def jitter(base: int, half: int) -> int:
        return base + (rng.randint(-half, half) if half else 0)

    kdur = lambda: jitter(cfg.kernel_duration_ns, cfg.kernel_jitter_ns)  # noqa: E731
    gap = lambda: jitter(cfg.intra_gap_ns, cfg.intra_jitter_ns)  # noqa: E731

    pattern = rng.sample(range(cfg.vocab_size), cfg.pattern_len)
    outside = sorted(set(range(cfg.vocab_size)) - set(pattern))
    L = cfg.pattern_len

    copy_bytes = cfg.htod_bytes_per_iter
    if cfg.pathology == "oversize_copy":
        copy_bytes = _half_up(Fraction(copy_bytes) * Fraction(cfg.pathology_factor))
    copy_dur = max(1, _half_up(Fraction(copy_bytes * 10**9, cfg.htod_bandwidth_bytes_per_s)))
    dtoh_dur = max(1, _half_up(Fraction(DTOH_BYTES * 10**9, cfg.htod_bandwidth_bytes_per_s)))

    tl = _Timeline()
    end = tl.op(ASSIST_STREAM, 0, 1_000, "[CUDA memset]", ASSIST_BYTES)
    tl.op(ASSIST_STREAM, end, max(1, _half_up(Fraction(ASSIST_BYTES * 10**9, cfg.htod_bandwidth_bytes_per_s))),
          "[CUDA memcpy HtoD]", ASSIST_BYTES)

    t = MAIN_START_NS
    last_end = t
    for j in range(cfg.init_ops):
        last_end = tl.op(MAIN_STREAM, t, kdur(), f"void init_op_{j}(float*)")
        t = last_end + gap()

    spans = []
    t_starts, t_ends, copy_windows = [], [], []
    op_gap_means = []
    for k in range(cfg.iterations):
        host = jitter(cfg.interval_gap_ns, cfg.interval_jitter_ns)
        if cfg.pathology == "graph_growth":
            host = _half_up(Fraction(host) * Fraction(cfg.pathology_factor))
        start = last_end + max(host, copy_dur)
        tl.op(HTOD_STREAM, start - copy_dur, copy_dur, "[CUDA memcpy HtoD]", copy_bytes)
        copy_windows.append((start - copy_dur, start))

        interior = [0] * max(L - 1, 0)
        trailing = 0
        if cfg.max_inserts > 0 and rng.random() < cfg.insert_prob:
            n_ins = rng.randint(1, cfg.max_inserts)
            trailing = 1 if cfg.insert_mode == "mixed" else n_ins
            for _ in range(n_ins - trailing):
                if L > 1:
                    interior[rng.randrange(L - 1)] += 1
                else:
                    trailing += 1

        first_token = len(tl.main)
        t = start
        gaps = []
        for pos, v in enumerate(pattern):
            op_end = tl.op(MAIN_STREAM, t, kdur(), kernel_name(v))
            if pos < L - 1:
                for _ in range(interior[pos]):
                    g = gap()
                    gaps.append(g)
                    op_end = tl.op(MAIN_STREAM, op_end + g, kdur(), kernel_name(rng.choice(outside)))
                g = gap()
                gaps.append(g)
                t = op_end + g
        body_end = op_end
        spans.append((first_token, len(tl.main) - 1, sum(interior)))
        t_starts.append(start)
        t_ends.append(body_end)
        op_gap_means.append(Fraction(sum(gaps), len(gaps)) if gaps else Fraction(0))

        tl.op(DTOH_STREAM, body_end, dtoh_dur, "[CUDA memcpy DtoH]", DTOH_BYTES)
        last_end = body_end
        for _ in range(trailing):
            last_end = tl.op(MAIN_STREAM, last_end + gap(), kdur(), kernel_name(rng.choice(outside)))

    intervals: list[Optional[int]] = [None]
    overlaps: list[Optional[Fraction]] = [None]
    htod = [ASSIST_BYTES + copy_bytes]
    for k in range(1, cfg.iterations):
        iv = t_starts[k] - t_ends[k - 1]
        intervals.append(iv)
        c0, c1 = copy_windows[k]
        covered = max(0, min(c1, t_starts[k]) - max(c0, t_ends[k - 1]))
        overlaps.append(Fraction(covered, iv) if iv > 0 else None)
        htod.append(copy_bytes)

    names = [kernel_name(v) for v in pattern]
    return tl, names, spans, intervals, overlaps, htod, op_gap_means


def _expected(cfg, intervals, overlaps, htod, op_gap_means) -> tuple[dict, str]:
    ivs = [x for x in intervals if x is not None]
    ovs = [x for x in overlaps if x is not None]
    n = len(intervals)
    summary = {
        "avg_interval_ns": _half_up(Fraction(sum(ivs), len(ivs))) if ivs else 0,
        "max_interval_ns": max(ivs) if ivs else 0,
        "avg_overlap": round(float(sum(ovs, Fraction(0)) / len(ovs)), 6) if ovs else 0.0,
        "avg_operation_ns": _half_up(sum(op_gap_means, Fraction(0)) / n),
        "avg_size_bytes": _half_up(Fraction(sum(htod), n)),
        "iterations_found": n,
        "iterations_declared": cfg.iterations,
        "insufficient_iterations": n < 2,
    }
    if n < 2:
        code = "INSUFFICIENT_DATA"
    elif summary["avg_overlap"] >= THETA_COPY:
        code = "COPY_BOUND"
    elif summary["avg_interval_ns"] > 0 and (
        summary["avg_operation_ns"] == 0
        or summary["avg_interval_ns"] >= THETA_CPU * summary["avg_operation_ns"]
    ):
        code = "CPU_BOUND"
    else:
        code = "NONE"
    return summary, code


TRACE_HEADER = ("Start", "Duration", "Size", "Throughput", "Device", "Context", "Stream", "Name")
TRACE_UNITS = ("us", "us", "B", "GB/s", "", "", "", "")


def write_trace_csv(rows: Sequence[tuple], path: Union[str, Path]) -> None:
    """Write ``(start, stream, duration, size, name)`` rows in the profiler CSV layout."""
    ordered = sorted(rows, key=lambda r: (r[0], r[1]))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("==4242== NVPROF is profiling process 4242, command: python train.py\n")
        fh.write("==4242== Profiling application: python train.py\n")
        fh.write("==4242== Profiling result:\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        w.writerow(TRACE_UNITS)
        for start, stream, duration, size, name in ordered:
            w.writerow(
                (
                    _fmt_us(start),
                    _fmt_us(duration),
                    "" if size is None else size,
                    "" if size is None else _throughput(size, duration),
                    DEVICE,
                    1,
                    stream,
                    name,
                )
            )


def generate_trace(
    cfg: SynthConfig, trace_out: Union[str, Path], truth_out: Union[str, Path]
) -> GroundTruth:
    """Write a synthetic trace CSV and its ground-truth JSON; return the truth."""
    cfg.validate()
    tl, names, spans, intervals, overlaps, htod, op_gap_means = _plan(cfg)
    summary, code = _expected(cfg, intervals, overlaps, htod, op_gap_means)
    truth = GroundTruth(
        pattern_names=names,
        spans=spans,
        intervals_ns=intervals,
        overlaps=[None if x is None else float(x) for x in overlaps],
        htod_bytes=htod,
        op_gap_mean_ns=[float(x) for x in op_gap_means],
        expected_summary=summary,
        expected_diagnosis=code,
        streams={
            "main": MAIN_STREAM,
            "copy_htod": HTOD_STREAM,
            "copy_dtoh": DTOH_STREAM,
            "assist": [ASSIST_STREAM],
        },
        main_ops=len(tl.main),
        config=asdict(cfg),
    )
    try:
        write_trace_csv(tl.rows, trace_out)
        with open(truth_out, "w", encoding="utf-8", newline="") as fh:
            json.dump(truth.to_dict(), fh, indent=1)
            fh.write("\n")
    except OSError as exc:
        raise OutputError(f"cannot write synthetic trace: {exc}") from exc
    return truth


@dataclass(frozen=True)
class TruthViolation:
    kind: str
    detail: str


def _as_mapping(obj) -> Mapping:
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    return obj


def _detail_row(m) -> Mapping:
    if isinstance(m, Mapping):
        return m
    return {
        "token_start": m.span.start_token,
        "token_end": m.span.end_token,
        "interval_ns": m.interval_ns,
    }


def verify_against_truth(report, details, truth, loop: int = 0) -> list[TruthViolation]:
    """Compare an analysis (summary + details) with a generator sidecar.

    ``report`` may be a :class:`~itermine.report.Report` or the parsed
    summary document; ``details`` iteration metrics or parsed detail rows.
    Intervals must agree within 1 ns.
    """
    rep = _as_mapping(report)
    tr = truth if isinstance(truth, GroundTruth) else GroundTruth.from_dict(truth)
    out: list[TruthViolation] = []
    lp = rep["loops"][loop]

    names = list(lp["pattern"]["names"])
    if names != list(tr.pattern_names):
        out.append(TruthViolation("PatternMismatch", f"mined {len(names)} ops, planted {len(tr.pattern_names)}"))

    rows = [_detail_row(m) for m in details]
    found = {(r["token_start"], r["token_end"]): r for r in rows}
    planted = {(s, e): k for k, (s, e, _x) in enumerate(tr.spans)}
    for key in sorted(set(planted) - set(found)):
        out.append(TruthViolation("MissingSpan", f"planted iteration {planted[key] + 1} at tokens {key}"))
    for key in sorted(set(found) - set(planted)):
        out.append(TruthViolation("UnexpectedSpan", f"span at tokens {key} was not planted"))

    if set(found) == set(planted):
        for key, k in sorted(planted.items(), key=lambda kv: kv[1]):
            want = tr.intervals_ns[k]
            got = found[key]["interval_ns"]
            if want is None or got is None:
                if want != got:
                    out.append(TruthViolation("IntervalMismatch", f"iteration {k + 1}: got {got}, planted {want}"))
            elif abs(got - want) > 1:
                out.append(TruthViolation("IntervalMismatch", f"iteration {k + 1}: got {got} ns, planted {want} ns"))

    code = lp["diagnosis"]["code"]
    if code != tr.expected_diagnosis:
        out.append(TruthViolation("DiagnosisMismatch", f"got {code}, planted {tr.expected_diagnosis}"))
    return out
