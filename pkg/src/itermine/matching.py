"""Approximate occurrences of a pattern that tolerate inserted tokens.

An occurrence starts on a token equal to ``pattern[0]`` and contains the
pattern as a subsequence, with at most ``k0`` foreign tokens interleaved.
Occurrences are found greedily left to right and never overlap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence


@dataclass(frozen=True)
class MatchConfig:
    k0: int

    def __post_init__(self):
        if self.k0 < 0:
            raise ValueError(f"k0 must be non-negative, got {self.k0}")

    @classmethod
    def default_for(cls, pattern_length: int, k0: Optional[int] = None) -> "MatchConfig":
        """``k0`` if given, else a quarter of the pattern length rounded up."""
        if k0 is None:
            k0 = math.ceil(pattern_length / 4)
        return cls(k0)


class MatchSpan(NamedTuple):
    """Inclusive token range ``[start_token, end_token]`` holding one occurrence."""

    start_token: int
    end_token: int
    extra: int

    @property
    def length(self) -> int:
        return self.end_token - self.start_token + 1


def approx_match(tokens: Sequence[int], pattern: Sequence[int], cfg: MatchConfig) -> list[MatchSpan]:
    """Scan ``tokens`` for budgeted occurrences of ``pattern``.

    From each anchor the scan consumes tokens one at a time; a token equal
    to the next unmatched pattern symbol is matched, anything else counts
    as extra. The anchor is abandoned once extras exceed ``k0``. A complete
    match is recorded up to its last matched token and scanning resumes
    right after it; an abandoned anchor resumes one position later.

    Worst case O(len(pattern) * len(tokens)).
    """
    m = len(pattern)
    n = len(tokens)
    if not 1 <= m <= n:
        if m == 0:
            raise ValueError("pattern must be nonempty")
        return []
    k0 = cfg.k0
    head = pattern[0]
    spans: list[MatchSpan] = []
    i = 0
    while i <= n - m:
        if tokens[i] != head:
            i += 1
            continue
        j = 1
        pos = i + 1
        extra = 0
        while j < m and pos < n:
            if tokens[pos] == pattern[j]:
                j += 1
            else:
                extra += 1
                if extra > k0:
                    break
            pos += 1
        if j == m:
            spans.append(MatchSpan(i, pos - 1, extra))
            i = pos
        else:
            i += 1
    return spans


class SpanViolation(NamedTuple):
    kind: str  # OverlapViolation, OrderViolation, ContentViolation, BudgetViolation, BoundsViolation
    index: int
    detail: str


def _is_subsequence_exact(window: Sequence[int], pattern: Sequence[int]) -> bool:
    it = iter(window)
    return all(any(t == p for t in it) for p in pattern)


def validate_spans(
    spans: Sequence[MatchSpan], tokens: Sequence[int], pattern: Sequence[int], cfg: MatchConfig
) -> list[SpanViolation]:
    """Check spans for ordering, disjointness, budget and content; empty list when valid."""
    out: list[SpanViolation] = []
    m = len(pattern)
    prev_end = -1
    prev_start = -1
    for k, sp in enumerate(spans):
        if sp.start_token > sp.end_token or sp.start_token < 0 or sp.end_token >= len(tokens):
            out.append(SpanViolation("BoundsViolation", k, f"span {tuple(sp)} outside 0..{len(tokens) - 1}"))
            continue
        if sp.start_token <= prev_end:
            kind = "OrderViolation" if sp.start_token < prev_start else "OverlapViolation"
            out.append(SpanViolation(kind, k, f"span {tuple(sp)} starts at or before previous end {prev_end}"))
        if sp.extra > cfg.k0:
            out.append(SpanViolation("BudgetViolation", k, f"extra {sp.extra} exceeds k0={cfg.k0}"))
        window = tokens[sp.start_token : sp.end_token + 1]
        if sp.length != m + sp.extra:
            out.append(SpanViolation("ContentViolation", k, f"length {sp.length} != {m} + extra {sp.extra}"))
        elif (
            window[0] != pattern[0]
            or window[-1] != pattern[-1]
            or not _is_subsequence_exact(window, pattern)
        ):
            out.append(SpanViolation("ContentViolation", k, "removing extra tokens does not leave the pattern"))
        prev_end = max(prev_end, sp.end_token)
        prev_start = sp.start_token
    return out
