"""Mine the per-iteration operation pattern from the main-stream token sequence.

Given the number of iterations ``i`` a loop executed, the iteration body is
taken to be the longest substring ``P`` of ``S`` such that

* ``i - eps < count(P) <= i``  (some iterations may be perturbed), and
* ``len(P) < len(S) / i``      (iterations plus setup operations fill ``S``).

``eps`` starts small and doubles until a candidate appears or it reaches
the cap. Ties on length go to the higher count, then to the earliest
occurrence in ``S``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import AmbiguousLoops, InvalidIterationCount, NoPatternFound
from .streams import TokenSequence
from .suffixtree import ROOT, SuffixTree


@dataclass(frozen=True)
class MiningConfig:
    iterations: int
    epsilon0: int = 1
    epsilon_cap: Optional[int] = None

    def __post_init__(self):
        if self.iterations < 2:
            raise ValueError(f"iterations must be at least 2, got {self.iterations}")
        if not 1 <= self.epsilon0 < self.iterations:
            raise ValueError(
                f"epsilon0 must satisfy 1 <= epsilon0 < iterations, got {self.epsilon0}"
            )

    @property
    def cap(self) -> int:
        return self.iterations if self.epsilon_cap is None else self.epsilon_cap


@dataclass(frozen=True)
class PatternCandidate:
    tokens: tuple[int, ...]
    length: int
    count: int
    first_occurrence: int
    epsilon_used: int


class Repeat(NamedTuple):
    """A repeated substring ``S[first:first + length]`` occurring ``count`` times."""

    first: int
    length: int
    count: int
    node: int


def max_pattern_length(length: int, iterations: int) -> int:
    """Largest integer strictly below ``length / iterations``."""
    return (length - 1) // iterations


def _repeat_arrays(tree: SuffixTree, min_count: int, max_len: int):
    lc = tree.leaf_count
    mask = ~tree.is_leaf & (lc >= min_count)
    mask[ROOT] = False
    nodes = np.flatnonzero(mask)
    lengths = np.minimum(tree.depth[nodes], max_len)
    # the truncated label must still end on the edge into the node
    keep = lengths > tree.depth[tree.parent[nodes]]
    nodes = nodes[keep]
    return nodes, lengths[keep], lc[nodes], tree.first[nodes]


def enumerate_repeats(tree: SuffixTree, min_count: int, max_len: int) -> list[Repeat]:
    """One repeat per internal node with at least ``min_count`` leaves.

    The emitted string is the longest prefix of the node's path label that
    is no longer than ``max_len`` and still ends on the edge entering the
    node (so its count equals the node's leaf count). Nodes whose entire
    edge lies beyond ``max_len`` emit nothing.
    """
    if min_count < 2:
        raise ValueError("min_count must be at least 2")
    nodes, lengths, counts, first = _repeat_arrays(tree, min_count, max_len)
    return [
        Repeat(int(f), int(l), int(c), int(v))
        for v, l, c, f in zip(nodes.tolist(), lengths.tolist(), counts.tolist(), first.tolist())
    ]


def _select(arrays, iterations, eps) -> Optional[int]:
    nodes, lengths, counts, first = arrays
    ok = (counts > iterations - eps) & (counts <= iterations)
    if not ok.any():
        return None
    idx = np.flatnonzero(ok)
    # lexsort: last key is primary
    best = np.lexsort((first[idx], -counts[idx], -lengths[idx]))[0]
    return int(idx[best])


def _mine(tree: SuffixTree, length: int, cfg: MiningConfig, loop: Optional[int] = None) -> PatternCandidate:
    i = cfg.iterations
    if length < i:
        raise InvalidIterationCount(
            f"main stream has {length} operations, fewer than the {i} declared iterations"
        )
    l_max = max_pattern_length(length, i)
    if l_max < 1:
        raise NoPatternFound(
            f"no pattern can be shorter than {length}/{i} operations per iteration", loop
        )
    arrays = _repeat_arrays(tree, 2, l_max)
    eps = cfg.epsilon0
    tried = []
    while eps < cfg.cap:
        tried.append(eps)
        k = _select(arrays, i, eps)
        if k is not None:
            f, l, c = int(arrays[3][k]), int(arrays[1][k]), int(arrays[2][k])
            return PatternCandidate(tuple(tree.text[f : f + l]), l, c, f, eps)
        eps *= 2
    where = "" if loop is None else f"loop {loop}: "
    raise NoPatternFound(
        f"{where}no substring shorter than {length}/{i} operations repeats "
        f"within ({i} - eps, {i}] times for eps in {tried}",
        loop,
    )


def mine_pattern(
    seq: TokenSequence, cfg: MiningConfig, tree: Optional[SuffixTree] = None
) -> PatternCandidate:
    if len(seq) < cfg.iterations:
        raise InvalidIterationCount(
            f"main stream has {len(seq)} operations, fewer than the {cfg.iterations} declared iterations"
        )
    if tree is None:
        tree = SuffixTree(seq.tokens, seq.terminator)
    return _mine(tree, len(seq), cfg)


def mine_patterns_multi(
    seq: TokenSequence, loops: Sequence[MiningConfig], tree: Optional[SuffixTree] = None
) -> list[PatternCandidate]:
    """Mine one pattern per loop on a shared tree, in the order given."""
    if not loops:
        raise ValueError("at least one loop configuration is required")
    counts = [c.iterations for c in loops]
    if len(set(counts)) != len(counts):
        raise ValueError(f"loop iteration counts must be pairwise distinct, got {counts}")
    if len(seq) < max(counts):
        raise InvalidIterationCount(
            f"main stream has {len(seq)} operations, fewer than the {max(counts)} declared iterations"
        )
    if tree is None:
        tree = SuffixTree(seq.tokens, seq.terminator)
    found = [_mine(tree, len(seq), cfg, loop=k + 1) for k, cfg in enumerate(loops)]
    seen: dict[tuple[int, ...], int] = {}
    for k, cand in enumerate(found):
        if cand.tokens in seen:
            raise AmbiguousLoops(
                f"loops {seen[cand.tokens] + 1} and {k + 1} mined the same pattern "
                f"({cand.length} operations)"
            )
        seen[cand.tokens] = k
    return found
