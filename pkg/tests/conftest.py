from __future__ import annotations

import textwrap
from pathlib import Path

import pytest

from itermine.model import NormalizedTrace, TraceRecord

HEADER = "Start,Duration,Size,Throughput,Device,Context,Stream,Name"


def rec(start, duration, stream, name, size=None, row=0, device="dev0"):
    return TraceRecord(start, duration, size, None, device, stream, name, row)


def trace_of(*records) -> NormalizedTrace:
    return NormalizedTrace.from_records([r._replace(row=i) for i, r in enumerate(records)])


@pytest.fixture
def write_csv(tmp_path: Path):
    """Write dedented CSV text to a temp file and return its path."""

    def _write(text: str, name: str = "trace.csv", newline: str = "\n") -> Path:
        path = tmp_path / name
        body = textwrap.dedent(text).lstrip("\n")
        path.write_bytes(body.replace("\n", newline).encode("utf-8"))
        return path

    return _write


def synth_and_analyze(directory: Path, cfg, k0=None, epsilon0=1, iterations=None):
    """Generate a synthetic trace into ``directory`` and analyze it in-process."""
    from itermine.analysis import analyze_file
    from itermine.mining import MiningConfig
    from itermine.synth import generate_trace

    trace_path = directory / f"synth_{cfg.seed}.csv"
    truth = generate_trace(cfg, trace_path, directory / f"synth_{cfg.seed}.truth.json")
    i = cfg.iterations if iterations is None else iterations
    result = analyze_file(trace_path, [MiningConfig(i, epsilon0)], k0=k0)
    return result, truth


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
