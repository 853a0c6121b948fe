"""Bottleneck diagnosis and the summary/details output files."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence, Union

from . import __version__
from .errors import OutputError
from .metrics import IterationMetrics, SummaryMetrics, round_half_up

COPY_BOUND = "COPY_BOUND"
CPU_BOUND = "CPU_BOUND"
NONE = "NONE"
INSUFFICIENT_DATA = "INSUFFICIENT_DATA"

DETAILS_HEADER = (
    "iteration",
    "token_start",
    "token_end",
    "t_start_ns",
    "t_end_ns",
    "interval_ns",
    "overlap_ratio",
    "htod_bytes",
    "op_gap_mean_ns",
    "extra_ops",
)


@dataclass(frozen=True)
class Thresholds:
    # overlap of 0.12 is a copy bound; "much larger" is read as 10x
    theta_copy: float = 0.10
    theta_cpu: float = 10.0


@dataclass(frozen=True)
class Diagnosis:
    code: str
    evidence: dict
    message: str


def diagnose(summary: SummaryMetrics, thresholds: Thresholds = Thresholds()) -> Diagnosis:
    """Classify where the time between iterations goes.

    A large share of the interval spent in host-to-device copies means the
    next iteration waits for its input data. Otherwise, an interval that
    dwarfs the gap between consecutive operations inside an iteration
    points at host-side work in the training loop. Copy-bound wins when
    both hold.
    """
    if summary.iterations_found < 2:
        return Diagnosis(
            INSUFFICIENT_DATA,
            {"iterations_found": summary.iterations_found},
            "Fewer than two iterations were recovered; no interval to judge.",
        )
    ratio = (
        summary.avg_interval_ns / summary.avg_operation_ns if summary.avg_operation_ns > 0 else None
    )
    if summary.avg_overlap >= thresholds.theta_copy:
        return Diagnosis(
            COPY_BOUND,
            {"avg_overlap": summary.avg_overlap, "theta_copy": thresholds.theta_copy},
            f"{summary.avg_overlap:.1%} of the time between iterations is spent copying "
            "data from host to device. The next iteration waits on its input: try a "
            "smaller batch size, weighing throughput against model quality.",
        )
    cpu_bound = summary.avg_interval_ns > 0 and (
        ratio is None or summary.avg_interval_ns >= thresholds.theta_cpu * summary.avg_operation_ns
    )
    evidence = {
        "avg_interval_ns": summary.avg_interval_ns,
        "avg_operation_ns": summary.avg_operation_ns,
        "avg_overlap": summary.avg_overlap,
        "theta_cpu": thresholds.theta_cpu,
    }
    if cpu_bound:
        times = "far more" if ratio is None else f"{ratio:.1f}x"
        return Diagnosis(
            CPU_BOUND,
            evidence,
            f"The gap between iterations is {times} the gap between operations inside an "
            "iteration, and copies explain little of it. Host-side work in the training "
            "loop is stalling the GPU; look for calls that add nodes to the graph on "
            "every step.",
        )
    return Diagnosis(NONE, evidence, "No bottleneck outside the iteration body was detected.")


@dataclass
class LoopReport:
    iterations: int
    epsilon0: int
    epsilon_used: int
    k0: int
    pattern_names: list[str]
    pattern_count: int
    first_occurrence: int
    summary: SummaryMetrics
    diagnosis: Diagnosis

    @property
    def pattern_length(self) -> int:
        return len(self.pattern_names)

    def to_dict(self) -> dict:
        return {
            "iterations_declared": self.iterations,
            "epsilon0": self.epsilon0,
            "epsilon_used": self.epsilon_used,
            "k0": self.k0,
            "pattern": {
                "length": self.pattern_length,
                "count": self.pattern_count,
                "first_occurrence": self.first_occurrence,
                "names": list(self.pattern_names),
            },
            "iterations_found": self.summary.iterations_found,
            "summary": asdict(self.summary),
            "diagnosis": asdict(self.diagnosis),
        }


@dataclass
class Report:
    thresholds: Thresholds
    main_stream: int
    streams: list[dict]
    loops: list[LoopReport]
    warnings: list[str] = field(default_factory=list)
    trace: Optional[str] = None
    version: str = __version__

    def to_dict(self) -> dict:
        return {
            "tool": "itermine",
            "version": self.version,
            "trace": self.trace,
            "config": {
                "iterations": [lp.iterations for lp in self.loops],
                "epsilon0": [lp.epsilon0 for lp in self.loops],
                "k0": [lp.k0 for lp in self.loops],
                "theta_copy": self.thresholds.theta_copy,
                "theta_cpu": self.thresholds.theta_cpu,
            },
            "main_stream": self.main_stream,
            "streams": self.streams,
            "loops": [lp.to_dict() for lp in self.loops],
            "warnings": list(self.warnings),
        }


def summary_text(report: Report) -> str:
    return json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n"


def _cell(value: Any) -> str:
    return "" if value is None else str(value)


def details_rows(details: Sequence[IterationMetrics]) -> list[list[str]]:
    rows = []
    for m in details:
        rows.append(
            [
                str(m.index),
                str(m.span.start_token),
                str(m.span.end_token),
                str(m.t_start),
                str(m.t_end),
                _cell(m.interval_ns),
                "" if m.overlap_ratio is None else f"{m.overlap_ratio:.6f}",
                str(m.htod_bytes),
                str(round_half_up(m.op_gap_mean_ns)),
                str(m.extra_ops),
            ]
        )
    return rows


def details_text(details: Sequence[IterationMetrics]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(DETAILS_HEADER)
    writer.writerows(details_rows(details))
    return buf.getvalue()


def _write(path: Path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc


def details_paths(out_details: Union[str, Path], n_loops: int) -> list[Path]:
    """One details file per loop; with several loops ``x.csv`` becomes ``x.loop1.csv``, ..."""
    out_details = Path(out_details)
    if n_loops == 1:
        return [out_details]
    return [out_details.with_name(f"{out_details.stem}.loop{k}{out_details.suffix}") for k in range(1, n_loops + 1)]


def render_report(
    report: Report,
    details: Sequence[Sequence[IterationMetrics]],
    out_summary: Union[str, Path],
    out_details: Union[str, Path],
) -> list[Path]:
    """Write the summary document and per-iteration details table(s).

    ``details`` holds one list of iteration metrics per loop. Returns the
    paths written.
    """
    if details and isinstance(details[0], IterationMetrics):
        details = [details]
    paths = details_paths(out_details, len(details))
    _write(Path(out_summary), summary_text(report))
    for path, items in zip(paths, details):
        _write(path, details_text(items))
    return [Path(out_summary), *paths]


def load_summary(path: Union[str, Path]) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def load_details(path: Union[str, Path]) -> list[dict]:
    """Read a details table back, converting numeric cells (empty cells become None)."""
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            parsed = {}
            for key, value in row.items():
                if value == "":
                    parsed[key] = None
                elif key == "overlap_ratio":
                    parsed[key] = float(value)
                else:
                    parsed[key] = int(value)
            out.append(parsed)
    return out
