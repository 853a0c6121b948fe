"""Per-stream census, Main/Copy/Assist classification and the main-stream token sequence."""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .errors import EmptyMainStream, EmptyTrace, NoMainStream
from .model import NormalizedTrace, OpKind


class StreamClass(enum.Enum):
    MAIN = "Main"
    COPY_HTOD = "CopyHtoD"
    COPY_DTOH = "CopyDtoH"
    COPY_MIXED = "CopyMixed"
    ASSIST = "Assist"

    @property
    def is_copy(self) -> bool:
        return self in (StreamClass.COPY_HTOD, StreamClass.COPY_DTOH, StreamClass.COPY_MIXED)


@dataclass(frozen=True)
class StreamSummary:
    stream: int
    counts: Mapping[OpKind, int]
    first_start: int
    last_end: int

    @property
    def total(self) -> int:
        return sum(self.counts.values())


@dataclass(frozen=True)
class TokenSequence:
    """Main-stream operation names as dense integer tokens.

    ``tokens[i]`` names record ``record_index[i]`` of the source trace.
    Token ids are assigned in order of first appearance; ``terminator`` is
    the first id not used by the vocabulary.
    """

    tokens: list[int]
    vocab: list[str]
    record_index: list[int]
    stream: int

    @property
    def terminator(self) -> int:
        return len(self.vocab)

    def __len__(self) -> int:
        return len(self.tokens)

    def names(self, tokens: Sequence[int]) -> list[str]:
        return [self.vocab[t] for t in tokens]

    def encode(self, names: Sequence[str]) -> list[int]:
        lookup = {name: i for i, name in enumerate(self.vocab)}
        return [lookup[n] for n in names]


def summarize_streams(trace: NormalizedTrace) -> list[StreamSummary]:
    if not trace.records:
        raise EmptyTrace("trace contains no records")
    counts: dict[int, Counter] = {}
    first: dict[int, int] = {}
    last: dict[int, int] = {}
    for r in trace.records:
        s = r.stream
        c = counts.get(s)
        if c is None:
            c = counts[s] = Counter()
            first[s] = r.start
            last[s] = r.start + r.duration
        c[r.kind] += 1
        end = r.start + r.duration
        if end > last[s]:
            last[s] = end
    return [
        StreamSummary(s, dict(sorted(counts[s].items(), key=lambda kv: kv[0].value)), first[s], last[s])
        for s in sorted(counts)
    ]


def classify_stream(counts: Mapping[OpKind, int]) -> StreamClass:
    present = {kind for kind, n in counts.items() if n > 0}
    if OpKind.KERNEL in present:
        return StreamClass.MAIN
    if present and all(kind.is_memcpy for kind in present):
        if present == {OpKind.MEMCPY_HTOD}:
            return StreamClass.COPY_HTOD
        if present == {OpKind.MEMCPY_DTOH}:
            return StreamClass.COPY_DTOH
        return StreamClass.COPY_MIXED
    return StreamClass.ASSIST


def classify_streams(summaries: Sequence[StreamSummary]) -> dict[int, StreamClass]:
    return {s.stream: classify_stream(s.counts) for s in summaries}


def select_main_stream(
    classes: Mapping[int, StreamClass], summaries: Sequence[StreamSummary]
) -> tuple[int, list[str]]:
    """Pick the stream to analyze.

    Normally exactly one stream carries kernels. When several do, the one
    with the most kernels wins (lowest id on ties) and a
    ``MultipleMainStreams`` warning names the rest.
    """
    kernels = {s.stream: s.counts.get(OpKind.KERNEL, 0) for s in summaries}
    mains = sorted(s for s, c in classes.items() if c is StreamClass.MAIN)
    if not mains:
        raise NoMainStream("no stream contains a kernel operation")
    chosen = min(mains, key=lambda s: (-kernels.get(s, 0), s))
    warnings = []
    if len(mains) > 1:
        others = ", ".join(str(s) for s in mains if s != chosen)
        warnings.append(
            f"MultipleMainStreams: analyzing stream {chosen} "
            f"({kernels.get(chosen, 0)} kernels); other kernel streams: {others}"
        )
    return chosen, warnings


def filter_majority_device(trace: NormalizedTrace) -> tuple[NormalizedTrace, list[str]]:
    """Drop records from all but the most common device."""
    devices = Counter(r.device for r in trace.records)
    if len(devices) <= 1:
        return trace, []
    keep = min(devices, key=lambda d: (-devices[d], d))
    dropped = sorted(d for d in devices if d != keep)
    records = [r for r in trace.records if r.device == keep]
    warning = (
        f"MultipleDevices: analyzing {keep!r}; excluded "
        f"{len(trace.records) - len(records)} records from {', '.join(map(repr, dropped))}"
    )
    return NormalizedTrace(records, trace.origin, trace.warnings + [warning]), [warning]


def check_main_stream_order(trace: NormalizedTrace, stream: int) -> list[str]:
    """Warn when consecutive main-stream operations overlap in time.

    The analysis assumes one kernel at a time on the main stream; reported
    overlaps are usually timer granularity and are only counted.
    """
    overlaps = 0
    prev_end = None
    for r in trace.records:
        if r.stream != stream:
            continue
        if prev_end is not None and r.start < prev_end:
            overlaps += 1
        prev_end = r.start + r.duration
    if overlaps:
        return [f"OverlappingMainStreamOps: {overlaps} main-stream operations start before their predecessor ends"]
    return []


def build_token_sequence(trace: NormalizedTrace, main: int) -> TokenSequence:
    ids: dict[str, int] = {}
    vocab: list[str] = []
    tokens: list[int] = []
    index: list[int] = []
    for i, r in enumerate(trace.records):
        if r.stream != main:
            continue
        t = ids.get(r.name)
        if t is None:
            t = ids[r.name] = len(vocab)
            vocab.append(r.name)
        tokens.append(t)
        index.append(i)
    if not tokens:
        raise EmptyMainStream(f"stream {main} has no operations")
    return TokenSequence(tokens, vocab, index, main)


def main_stream_tokens(
    trace: NormalizedTrace, override: Optional[int] = None
) -> tuple[TokenSequence, list[StreamSummary], dict[int, StreamClass], list[str]]:
    """Census, classify and tokenize in one call; returns warnings too."""
    summaries = summarize_streams(trace)
    classes = classify_streams(summaries)
    if override is None:
        main, warnings = select_main_stream(classes, summaries)
    else:
        if override not in classes:
            raise NoMainStream(f"stream {override} does not occur in the trace")
        main, warnings = override, []
    warnings += check_main_stream_order(trace, main)
    return build_token_sequence(trace, main), summaries, classes, warnings
