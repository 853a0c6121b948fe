"""End-to-end pipeline: ingest, classify, tokenize, mine, match, measure, diagnose."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

from .ingest import IngestReport, parse_trace
from .matching import MatchConfig, MatchSpan, approx_match
from .metrics import (
    IterationMetrics,
    SummaryMetrics,
    compute_iteration_metrics,
    compute_summary,
    htod_records,
    partition_iterations,
)
from .mining import MiningConfig, PatternCandidate, mine_patterns_multi
from .model import NormalizedTrace
from .report import Diagnosis, LoopReport, Report, Thresholds, diagnose
from .streams import (
    StreamClass,
    StreamSummary,
    TokenSequence,
    filter_majority_device,
    main_stream_tokens,
)
from .suffixtree import SuffixTree

logger = logging.getLogger(__name__)


@dataclass
class LoopResult:
    config: MiningConfig
    pattern: PatternCandidate
    match: MatchConfig
    spans: list[MatchSpan]
    details: list[IterationMetrics]
    summary: SummaryMetrics
    diagnosis: Diagnosis


@dataclass
class AnalysisResult:
    trace: NormalizedTrace
    sequence: TokenSequence
    tree: SuffixTree
    summaries: list[StreamSummary]
    classes: dict[int, StreamClass]
    loops: list[LoopResult]
    report: Report
    ingest: Optional[IngestReport] = None

    @property
    def details(self) -> list[list[IterationMetrics]]:
        return [lp.details for lp in self.loops]


def stream_table(summaries: Sequence[StreamSummary], classes: dict[int, StreamClass]) -> list[dict]:
    return [
        {
            "stream": s.stream,
            "class": classes[s.stream].value,
            "counts": {kind.value: n for kind, n in s.counts.items()},
            "first_start_ns": s.first_start,
            "last_end_ns": s.last_end,
        }
        for s in summaries
    ]


def analyze(
    trace: NormalizedTrace,
    loops: Sequence[MiningConfig],
    k0: Optional[int] = None,
    thresholds: Thresholds = Thresholds(),
    main_stream: Optional[int] = None,
    trace_name: Optional[str] = None,
) -> AnalysisResult:
    warnings = list(trace.warnings)
    trace, device_warnings = filter_majority_device(trace)
    warnings += device_warnings
    seq, summaries, classes, stream_warnings = main_stream_tokens(trace, main_stream)
    warnings += stream_warnings
    logger.info("main stream %d: %d operations, %d distinct names", seq.stream, len(seq), len(seq.vocab))

    tree = SuffixTree(seq.tokens, seq.terminator)
    logger.info("suffix tree: %d nodes (%d leaves) over %d tokens", tree.n_nodes, tree.n_leaves, len(seq))
    patterns = mine_patterns_multi(seq, loops, tree)
    copies = htod_records(trace)

    results = []
    for cfg, pattern in zip(loops, patterns):
        mcfg = MatchConfig.default_for(pattern.length, k0)
        spans = approx_match(seq.tokens, pattern.tokens, mcfg)
        parts = partition_iterations(trace, seq, spans)
        details = compute_iteration_metrics(trace, parts, copies, seq)
        summary = compute_summary(details, cfg.iterations)
        diagnosis = diagnose(summary, thresholds)
        clamped = sum(m.clamped_gaps for m in details)
        if clamped:
            warnings.append(f"ClampedGaps: loop i={cfg.iterations}: {clamped} negative gaps clamped to 0")
        if len(spans) != cfg.iterations:
            warnings.append(
                f"IterationCountMismatch: loop i={cfg.iterations}: matched {len(spans)} iterations"
            )
        results.append(LoopResult(cfg, pattern, mcfg, spans, details, summary, diagnosis))

    report = Report(
        thresholds=thresholds,
        main_stream=seq.stream,
        streams=stream_table(summaries, classes),
        loops=[
            LoopReport(
                iterations=r.config.iterations,
                epsilon0=r.config.epsilon0,
                epsilon_used=r.pattern.epsilon_used,
                k0=r.match.k0,
                pattern_names=seq.names(r.pattern.tokens),
                pattern_count=r.pattern.count,
                first_occurrence=r.pattern.first_occurrence,
                summary=r.summary,
                diagnosis=r.diagnosis,
            )
            for r in results
        ],
        warnings=warnings,
        trace=trace_name,
    )
    return AnalysisResult(trace, seq, tree, summaries, classes, results, report)


def analyze_file(path: Union[str, Path], loops: Sequence[MiningConfig], **kwargs) -> AnalysisResult:
    trace, ingest = parse_trace(path)
    kwargs.setdefault("trace_name", Path(path).name)
    result = analyze(trace, loops, **kwargs)
    result.ingest = ingest
    return result
