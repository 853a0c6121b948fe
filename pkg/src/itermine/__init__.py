"""Recover training-loop iterations from GPU execution traces and diagnose stalls between them."""

__version__ = "0.1.0"

from .analysis import AnalysisResult, analyze, analyze_file  # noqa: E402
from .ingest import IngestReport, parse_trace  # noqa: E402
from .matching import MatchConfig, MatchSpan, approx_match, validate_spans  # noqa: E402
from .metrics import (  # noqa: E402
    IterationMetrics,
    SummaryMetrics,
    compute_iteration_metrics,
    compute_summary,
    partition_iterations,
)
from .mining import MiningConfig, PatternCandidate, enumerate_repeats, mine_pattern, mine_patterns_multi  # noqa: E402
from .model import NormalizedTrace, OpKind, TraceRecord, classify_op_kind, record_end  # noqa: E402
from .report import Diagnosis, Report, Thresholds, diagnose, render_report  # noqa: E402
from .streams import (  # noqa: E402
    StreamClass,
    StreamSummary,
    TokenSequence,
    build_token_sequence,
    classify_streams,
    select_main_stream,
    summarize_streams,
)
from .suffixtree import SuffixTree, build_suffix_tree  # noqa: E402
from .synth import GroundTruth, SynthConfig, generate_trace, verify_against_truth  # noqa: E402
