"""Undirected communication graphs with vertices labelled 1..K."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .errors import BadVertex, FormatError, InvalidTopology, TooSmall

KINDS = ("ring", "prism", "complete", "custom")


@dataclass(frozen=True)
class Topology:
    kind: str
    K: int
    edges: frozenset
    _nbrs: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidTopology(f"unknown topology kind {self.kind!r}")
        canon = set()
        for e in self.edges:
            i, j = (int(v) for v in e)
            if i == j:
                raise InvalidTopology(f"self-loop at vertex {i}")
            if not (1 <= i <= self.K and 1 <= j <= self.K):
                raise InvalidTopology(f"edge {i}-{j} outside 1..{self.K}")
            canon.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(canon))
        nbrs = [set() for _ in range(self.K + 1)]
        for i, j in canon:
            nbrs[i].add(j)
            nbrs[j].add(i)
        object.__setattr__(self, "_nbrs", tuple(frozenset(s) for s in nbrs))
        if not self._connected():
            raise InvalidTopology("graph is not connected")

    def _connected(self) -> bool:
        if self.K == 0:
            return False
        seen = {1}
        todo = deque([1])
        while todo:
            v = todo.popleft()
            for u in self._nbrs[v]:
                if u not in seen:
                    seen.add(u)
                    todo.append(u)
        return len(seen) == self.K

    def neighbors(self, k: int) -> frozenset:
        if not 1 <= k <= self.K:
            raise BadVertex(f"vertex {k} outside 1..{self.K}")
        return self._nbrs[k]

    def vertices(self) -> range:
        return range(1, self.K + 1)

    @property
    def degrees(self) -> list[int]:
        return [len(self._nbrs[k]) for k in self.vertices()]

    @property
    def degree(self) -> Optional[int]:
        """Common degree d, or None when the graph is not regular."""
        degs = set(self.degrees)
        return degs.pop() if len(degs) == 1 else None

    def is_regular(self) -> bool:
        return self.degree is not None

    def adjacency(self, spec):
        from .ffla import FieldMatrix

        a = np.zeros((self.K, self.K), dtype=np.int64)
        one = spec.one.code
        for i, j in self.edges:
            a[i - 1, j - 1] = one
            a[j - 1, i - 1] = one
        return FieldMatrix(spec, a)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "K": self.K, "edges": [list(e) for e in sorted(self.edges)]}

    @classmethod
    def from_dict(cls, data: dict) -> "Topology":
        try:
            kind, K, edges = data["kind"], int(data["K"]), data["edges"]
            pairs = [(int(i), int(j)) for i, j in edges]
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed topology: {exc}") from exc
        t = cls(kind, K, frozenset(pairs))
        if kind != "custom":
            expected = _NAMED[kind](K).edges
            if t.edges != expected:
                raise FormatError(f"edge list does not match a {kind} graph on {K} vertices")
        return t


def make_ring(K: int) -> Topology:
    if K < 3:
        raise TooSmall(f"a ring needs K >= 3, got {K}")
    return Topology("ring", K, frozenset((k, k % K + 1) for k in range(1, K + 1)))


def make_prism(M: int) -> Topology:
    """Two M-cycles 1..M and M+1..2M joined by rungs k -- k+M."""
    if M < 3:
        raise TooSmall(f"a prism needs M >= 3, got {M}")
    edges = set()
    for k in range(1, M + 1):
        nxt = k % M + 1
        edges.add((k, nxt))
        edges.add((k + M, nxt + M))
        edges.add((k, k + M))
    return Topology("prism", 2 * M, frozenset(edges))


def make_complete(K: int) -> Topology:
    if K < 2:
        raise TooSmall(f"a complete graph needs K >= 2, got {K}")
    return Topology("complete", K, frozenset((i, j) for i in range(1, K + 1) for j in range(i + 1, K + 1)))


def make_custom(K: int, edges: Iterable) -> Topology:
    return Topology("custom", K, frozenset(tuple(e) for e in edges))


def neighbors(t: Topology, k: int) -> frozenset:
    return t.neighbors(k)


def adjacency(t: Topology, spec):
    return t.adjacency(spec)


def _prism_from_k(K: int) -> Topology:
    if K % 2:
        raise InvalidTopology(f"a prism has an even number of vertices, got {K}")
    return make_prism(K // 2)


_NAMED = {"ring": make_ring, "prism": _prism_from_k, "complete": make_complete}
