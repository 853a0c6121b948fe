"""Linear-time suffix tree over integer token sequences (Ukkonen's online construction).

Nodes live in flat arrays indexed by node id; node 0 is the root. Each
node owns the edge entering it, ``text[start[v]:end[v]]``. Children are kept
in one dictionary keyed by ``parent * alphabet + first_token`` so the tree
works for alphabets of thousands of kernel names without a per-node dict.

After construction a single top-down/bottom-up pass fills in, per node:

* ``depth`` -- length of the path label from the root,
* ``leaf_count`` -- leaves below the node, i.e. how many times the path
  label occurs in the text (overlaps included),
* ``first`` -- smallest text position at which the path label occurs.
"""

from __future__ import annotations

from typing import Iterator, Optional, Sequence

import numpy as np

ROOT = 0


class SuffixTree:
    def __init__(self, tokens: Sequence[int], terminator: Optional[int] = None):
        if len(tokens) < 1:
            raise ValueError("cannot build a suffix tree over an empty sequence")
        if terminator is None:
            terminator = max(tokens) + 1
        text = list(tokens)
        text.append(terminator)
        self.text = text
        self.terminator = terminator
        self.alphabet = max(max(tokens), terminator) + 1
        self._build()
        self._annotate()

    # construction

    def _build(self) -> None:
        text = self.text
        n = len(text)
        A = self.alphabet
        start = [0]
        end = [0]
        link = [ROOT]
        children: dict[int, int] = {}
        get = children.get

        active_node = ROOT
        active_edge = 0
        active_len = 0
        remainder = 0
        for pos in range(n):
            c = text[pos]
            remainder += 1
            last_new = -1
            while remainder:
                if active_len == 0:
                    active_edge = pos
                key = active_node * A + text[active_edge]
                nxt = get(key)
                if nxt is None:
                    # leaves are created with their final end: the active
                    # point never walks past the current position
                    children[key] = len(start)
                    start.append(pos)
                    end.append(n)
                    link.append(ROOT)
                    if last_new >= 0:
                        link[last_new] = active_node
                        last_new = -1
                else:
                    s = start[nxt]
                    edge = end[nxt] - s
                    if active_len >= edge:
                        active_edge += edge
                        active_len -= edge
                        active_node = nxt
                        continue
                    if text[s + active_len] == c:
                        if last_new >= 0 and active_node != ROOT:
                            link[last_new] = active_node
                        active_len += 1
                        break
                    split = len(start)
                    start.append(s)
                    end.append(s + active_len)
                    link.append(ROOT)
                    children[key] = split
                    leaf = split + 1
                    start.append(pos)
                    end.append(n)
                    link.append(ROOT)
                    children[split * A + c] = leaf
                    start[nxt] = s + active_len
                    children[split * A + text[s + active_len]] = nxt
                    if last_new >= 0:
                        link[last_new] = split
                    last_new = split
                remainder -= 1
                if active_node == ROOT and active_len > 0:
                    active_len -= 1
                    active_edge = pos - remainder + 1
                elif active_node != ROOT:
                    active_node = link[active_node]

        self.n_nodes = len(start)
        self.start = np.asarray(start, dtype=np.int64)
        self.end = np.asarray(end, dtype=np.int64)
        self.link = np.asarray(link, dtype=np.int64)
        self._children = children

    def _annotate(self) -> None:
        n = len(self.text)
        A = self.alphabet
        m = self.n_nodes
        keys = np.fromiter(self._children.keys(), dtype=np.int64, count=len(self._children))
        kids = np.fromiter(self._children.values(), dtype=np.int64, count=len(self._children))
        parent = np.full(m, -1, dtype=np.int64)
        parent[kids] = keys // A
        self.parent = parent

        # CSR child lists ordered by (parent, first token)
        order = np.argsort(keys, kind="stable")
        by_parent = kids[order]
        offsets = np.zeros(m + 1, dtype=np.int64)
        np.add.at(offsets, parent[by_parent] + 1, 1)
        np.cumsum(offsets, out=offsets)
        self._child_ids = by_parent
        self._child_off = offsets

        # breadth-first order: every parent precedes its children
        off = offsets.tolist()
        child_ids = by_parent.tolist()
        bfs = [ROOT]
        extend = bfs.extend
        for v in bfs:
            a, b = off[v], off[v + 1]
            if a != b:
                extend(child_ids[a:b])
        bfs_arr = np.asarray(bfs, dtype=np.int64)

        edge = self.end - self.start
        edge[ROOT] = 0
        depth = np.zeros(m, dtype=np.int64)
        # depth = parent depth + edge length, resolved level by level
        dep = depth.tolist()
        par = parent.tolist()
        el = edge.tolist()
        for v in bfs[1:]:
            dep[v] = dep[par[v]] + el[v]
        depth = np.asarray(dep, dtype=np.int64)

        is_leaf = self.end == n
        is_leaf[ROOT] = False
        leaf_count = is_leaf.astype(np.int64)
        first = np.where(is_leaf, n - depth, n)
        lc = leaf_count.tolist()
        fo = first.tolist()
        for v in reversed(bfs[1:]):
            p = par[v]
            lc[p] += lc[v]
            if fo[v] < fo[p]:
                fo[p] = fo[v]
        self.depth = depth
        self.leaf_count = np.asarray(lc, dtype=np.int64)
        self.first = np.asarray(fo, dtype=np.int64)
        self.is_leaf = is_leaf
        self.bfs_order = bfs_arr

    # queries

    def __len__(self) -> int:
        return self.n_nodes

    @property
    def n_leaves(self) -> int:
        return int(self.is_leaf.sum())

    @property
    def n_internal(self) -> int:
        return self.n_nodes - self.n_leaves

    def children(self, v: int) -> list[int]:
        return self._child_ids[self._child_off[v] : self._child_off[v + 1]].tolist()

    def child(self, v: int, token: int) -> Optional[int]:
        return self._children.get(v * self.alphabet + token)

    def edge_label(self, v: int) -> list[int]:
        if v == ROOT:
            return []
        return self.text[self.start[v] : self.end[v]]

    def path_label(self, v: int) -> list[int]:
        """Token string spelled from the root to ``v`` (terminator included for leaves)."""
        f = int(self.first[v])
        return self.text[f : f + int(self.depth[v])]

    def internal_nodes(self) -> Iterator[int]:
        for v in range(self.n_nodes):
            if not self.is_leaf[v]:
                yield v

    def locate(self, pattern: Sequence[int]) -> Optional[int]:
        """Return the node at or below the end of ``pattern``'s path, or None if absent."""
        v = ROOT
        i = 0
        text = self.text
        while i < len(pattern):
            w = self.child(v, pattern[i])
            if w is None:
                return None
            s, e = int(self.start[w]), int(self.end[w])
            k = 0
            while k < e - s and i < len(pattern):
                if text[s + k] != pattern[i]:
                    return None
                k += 1
                i += 1
            v = w
        return v

    def count(self, pattern: Sequence[int]) -> int:
        """Occurrences of ``pattern`` in the text (overlaps counted)."""
        if len(pattern) == 0:
            return len(self.text)
        v = self.locate(pattern)
        return 0 if v is None else int(self.leaf_count[v])


def build_suffix_tree(tokens: Sequence[int], terminator: Optional[int] = None) -> SuffixTree:
    return SuffixTree(tokens, terminator)
