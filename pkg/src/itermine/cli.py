"""Command-line front end: ``analyze``, ``synth`` and ``inspect``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Optional, Sequence

from . import __version__
from .analysis import AnalysisResult, analyze_file, stream_table
from .errors import ClassifyError, IngestError, InvalidConfig, IterMineError, MiningError, NoIterations, OutputError
from .ingest import parse_trace
from .mining import MiningConfig
from .report import Thresholds, render_report
from .streams import classify_streams, filter_majority_device, summarize_streams
from .synth import SynthConfig, generate_trace

EXIT_OK = 0
EXIT_NO_PATTERN = 2
EXIT_INGEST = 3
EXIT_USAGE = 4

EXIT_CODES = """\
exit codes:
  0  success (a diagnosis is information, not failure)
  2  no iteration pattern found for the declared iteration count(s)
  3  the trace could not be read, has no usable main stream, or output could not be written
  4  invalid arguments or configuration
"""

ANALYZE_DEFAULTS = {
    "trace": None,
    "iterations": None,
    "loops": None,
    "epsilon0": 1,
    "k0": None,
    "theta_copy": Thresholds.theta_copy,
    "theta_cpu": Thresholds.theta_cpu,
    "out_summary": "summary.json",
    "out_details": "details.csv",
    "main_stream": None,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class AnalyzeArgs:
    trace: Path
    loops: list[int]
    epsilon0: int = 1
    k0: Optional[int] = None
    theta_copy: float = Thresholds.theta_copy
    theta_cpu: float = Thresholds.theta_cpu
    out_summary: Path = Path("summary.json")
    out_details: Path = Path("details.csv")
    main_stream: Optional[int] = None

    def validate(self) -> None:
        if not self.loops:
            raise UsageError("one of --iterations or --loops is required")
        if any(i < 2 for i in self.loops):
            raise UsageError("iteration counts must be at least 2")
        if len(set(self.loops)) != len(self.loops):
            raise UsageError(f"loop iteration counts must be distinct, got {self.loops}")
        if any(not 1 <= self.epsilon0 < i for i in self.loops):
            raise UsageError("--epsilon0 must satisfy 1 <= epsilon0 < iterations")
        if self.k0 is not None and self.k0 < 0:
            raise UsageError("--k0 must be non-negative")
        if self.theta_copy < 0 or self.theta_cpu < 0:
            raise UsageError("thresholds must be non-negative")
        paths = [Path(self.trace).resolve(), Path(self.out_summary).resolve(), Path(self.out_details).resolve()]
        if len(set(paths)) != len(paths):
            raise UsageError("--trace, --out-summary and --out-details must be distinct paths")


def _style(text: str, stream=None) -> str:
    stream = stream or sys.stdout
    if os.environ.get("NO_COLOR") or not getattr(stream, "isatty", lambda: False)():
        return text
    return f"\033[1m{text}\033[0m"


def _load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    return data


def _merge(flags: argparse.Namespace, config: dict, defaults: dict) -> dict:
    """flags > config file > defaults."""
    unknown = sorted(set(config) - set(defaults))
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    out = dict(defaults)
    out.update(config)
    for key in defaults:
        value = getattr(flags, key, None)
        if value is not None:
            out[key] = value
    return out


def _parse_loops(text) -> list[int]:
    if isinstance(text, list):
        return [int(x) for x in text]
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--loops expects comma-separated integers, got {text!r}") from None


def build_analyze_args(ns: argparse.Namespace) -> AnalyzeArgs:
    opts = _merge(ns, _load_config(ns.config), ANALYZE_DEFAULTS)
    if opts["trace"] is None:
        raise UsageError("--trace is required")
    if opts["iterations"] is not None and opts["loops"] is not None:
        raise UsageError("give either --iterations or --loops, not both")
    if opts["loops"] is not None:
        loops = _parse_loops(opts["loops"])
    elif opts["iterations"] is not None:
        loops = [int(opts["iterations"])]
    else:
        loops = []
    args = AnalyzeArgs(
        trace=Path(opts["trace"]),
        loops=loops,
        epsilon0=int(opts["epsilon0"]),
        k0=None if opts["k0"] is None else int(opts["k0"]),
        theta_copy=float(opts["theta_copy"]),
        theta_cpu=float(opts["theta_cpu"]),
        out_summary=Path(opts["out_summary"]),
        out_details=Path(opts["out_details"]),
        main_stream=None if opts["main_stream"] is None else int(opts["main_stream"]),
    )
    args.validate()
    return args


def _fail(stage: str, message: str, code: int) -> int:
    print(f"itermine: error [{stage}]: {message}", file=sys.stderr)
    return code


def _print_analysis(result: AnalysisResult, written: Sequence[Path]) -> None:
    seq = result.sequence
    rep = result.report
    print(_style("trace"), f"       {rep.trace}")
    print(_style("main stream"), f" {seq.stream} ({len(seq)} operations, {len(seq.vocab)} distinct names)")
    for k, lp in enumerate(rep.loops, start=1):
        s = lp.summary
        print(_style(f"loop {k}"), f"      i={lp.iterations} eps={lp.epsilon_used} k0={lp.k0}")
        print(f"  pattern          {lp.pattern_length} operations, {lp.pattern_count} exact repeats, "
              f"first at token {lp.first_occurrence}")
        print(f"  iterations       {s.iterations_found} matched")
        print(f"  avg interval     {s.avg_interval_ns} ns (max {s.max_interval_ns} ns)")
        print(f"  avg overlap      {s.avg_overlap:.6f}")
        print(f"  avg operation    {s.avg_operation_ns} ns")
        print(f"  avg size         {s.avg_size_bytes} B")
        print(f"  diagnosis        {lp.diagnosis.code}: {lp.diagnosis.message}")
    if rep.warnings:
        print(_style("warnings"))
        for w in rep.warnings:
            print(f"  {w}")
    else:
        print(_style("warnings"), "    none")
    for path in written:
        print(f"wrote {path}")


def run_analyze(args: AnalyzeArgs) -> int:
    try:
        loops = [MiningConfig(i, args.epsilon0) for i in args.loops]
    except ValueError as exc:
        return _fail("config", str(exc), EXIT_USAGE)
    try:
        result = analyze_file(
            args.trace,
            loops,
            k0=args.k0,
            thresholds=Thresholds(args.theta_copy, args.theta_cpu),
            main_stream=args.main_stream,
        )
        written = render_report(result.report, result.details, args.out_summary, args.out_details)
    except (IngestError, ClassifyError, OutputError) as exc:
        return _fail(exc.stage, str(exc), EXIT_INGEST)
    except (MiningError, NoIterations) as exc:
        return _fail(exc.stage, str(exc), EXIT_NO_PATTERN)
    _print_analysis(result, written)
    return EXIT_OK


def run_synth(cfg: SynthConfig, trace_out: Path, truth_out: Path) -> int:
    try:
        cfg.validate()
    except InvalidConfig as exc:
        return _fail("config", str(exc), EXIT_USAGE)
    try:
        truth = generate_trace(cfg, trace_out, truth_out)
    except OutputError as exc:
        return _fail("synth", str(exc), EXIT_INGEST)
    print(f"wrote {trace_out} ({truth.main_ops} main-stream operations, {cfg.iterations} iterations)")
    print(f"wrote {truth_out} (expected diagnosis {truth.expected_diagnosis})")
    return EXIT_OK


def run_inspect(trace_path: Path) -> int:
    try:
        trace, ingest = parse_trace(trace_path)
        trace, _ = filter_majority_device(trace)
        summaries = summarize_streams(trace)
    except (IngestError, ClassifyError) as exc:
        return _fail(exc.stage, str(exc), EXIT_INGEST)
    table = stream_table(summaries, classify_streams(summaries))
    kinds = ["Kernel", "MemcpyHtoD", "MemcpyDtoH", "MemcpyDtoD", "Memset", "Other"]
    print(_style(f"{'stream':>8} {'class':<10} " + " ".join(f"{k:>10}" for k in kinds)))
    for row in table:
        counts = " ".join(f"{row['counts'].get(k, 0):>10}" for k in kinds)
        print(f"{row['stream']:>8} {row['class']:<10} {counts}")
    print(f"{ingest.rows_parsed} records parsed, {ingest.rows_skipped} skipped")
    for w in trace.warnings:
        print(f"warning: {w}")
    return EXIT_OK


def _synth_flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="itermine",
        description="Recover training-loop iterations from GPU trace CSV exports and diagnose stalls.",
        epilog=EXIT_CODES,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"itermine {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    fmt = argparse.RawDescriptionHelpFormatter
    an = sub.add_parser("analyze", help="mine iterations and compute metrics", epilog=EXIT_CODES, formatter_class=fmt)
    an.add_argument("--trace", help="GPU-trace CSV file (required)")
    an.add_argument("--iterations", type=int, help="iteration count of the training loop")
    an.add_argument("--loops", help="comma-separated iteration counts, one per loop (instead of --iterations)")
    an.add_argument("--epsilon0", type=int, help="initial repeat-count slack, doubled on failure (default: 1)")
    an.add_argument("--k0", type=int, help="extra operations tolerated per iteration (default: ceil(pattern length / 4))")
    an.add_argument("--theta-copy", dest="theta_copy", type=float, help="avg overlap at or above which copies are the bottleneck (default: 0.10)")
    an.add_argument("--theta-cpu", dest="theta_cpu", type=float, help="avg interval / avg operation ratio at or above which host work is the bottleneck (default: 10)")
    an.add_argument("--out-summary", dest="out_summary", help="summary JSON path (default: summary.json)")
    an.add_argument("--out-details", dest="out_details", help="per-iteration CSV path (default: details.csv)")
    an.add_argument("--main-stream", dest="main_stream", type=int, help="analyze this stream instead of the detected main stream (default: detected)")
    an.add_argument("--config", help="JSON file with any of the options above; flags take precedence (default: none)")

    sy = sub.add_parser("synth", help="generate a synthetic trace and its ground truth", epilog=EXIT_CODES, formatter_class=fmt)
    sy.add_argument("--out-trace", dest="out_trace", default="synthetic_trace.csv", help="trace CSV path (default: synthetic_trace.csv)")
    sy.add_argument("--out-truth", dest="out_truth", default="synthetic_truth.json", help="ground-truth JSON path (default: synthetic_truth.json)")
    sy.add_argument("--config", help="JSON file with generator settings; flags take precedence (default: none)")
    for f in fields(SynthConfig):
        sy.add_argument(_synth_flag(f.name), dest=f.name, type=type(f.default), help=f"(default: {f.default})")

    ins = sub.add_parser("inspect", help="print the per-stream operation census", epilog=EXIT_CODES, formatter_class=fmt)
    ins.add_argument("--trace", required=True, help="GPU-trace CSV file")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if ns.verbose else logging.ERROR,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if ns.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        if ns.command == "analyze":
            return run_analyze(build_analyze_args(ns))
        if ns.command == "synth":
            defaults = {f.name: f.default for f in fields(SynthConfig)}
            opts = _merge(ns, _load_config(ns.config), defaults)
            try:
                cfg = SynthConfig.from_mapping(opts)
            except (InvalidConfig, TypeError) as exc:
                raise UsageError(str(exc)) from exc
            return run_synth(cfg, Path(ns.out_trace), Path(ns.out_truth))
        return run_inspect(Path(ns.trace))
    except UsageError as exc:
        return _fail("arguments", str(exc), EXIT_USAGE)
    except IterMineError as exc:
        return _fail(exc.stage, str(exc), EXIT_INGEST)
