"""Model linkage graphs and transitive parameter tying.

Learner ids are 0-based everywhere in the Python API. Files on disk use
1-based ids; conversion happens in :func:`graph_from_dict` and
:func:`graph_to_dict` only.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .exceptions import (
    DuplicateEdge,
    GraphError,
    InvalidLearner,
    OutOfRangeSlot,
    SelfLoop,
)

__all__ = [
    "LinkageEdge",
    "LinkageGraph",
    "TiedParameterSpace",
    "UnionFind",
    "build_graph",
    "connected_component",
    "neighbors",
    "tie_parameters",
    "induced_edges",
    "graph_from_dict",
    "graph_to_dict",
    "load_graph",
]


@dataclass(frozen=True)
class LinkageEdge:
    """Declares ``theta[i][slot_i] == theta[j][slot_j]`` for every pair."""

    i: int
    j: int
    pairs: tuple[tuple[int, int], ...]

    def normalized(self) -> "LinkageEdge":
        if self.i <= self.j:
            return self
        return LinkageEdge(self.j, self.i, tuple((b, a) for a, b in self.pairs))

    @property
    def key(self) -> tuple[int, int]:
        return (min(self.i, self.j), max(self.i, self.j))


@dataclass(frozen=True)
class LinkageGraph:
    dims: tuple[int, ...]
    edges: tuple[LinkageEdge, ...]
    _adj: tuple[frozenset, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        adj = [set() for _ in self.dims]
        for e in self.edges:
            adj[e.i].add(e.j)
            adj[e.j].add(e.i)
        object.__setattr__(self, "_adj", tuple(frozenset(a) for a in adj))

    @property
    def M(self) -> int:
        return len(self.dims)

    def adjacent(self, v: int) -> frozenset:
        return self._adj[v]

    def edge_keys(self) -> set[tuple[int, int]]:
        return {e.key for e in self.edges}


def _as_edge(e) -> LinkageEdge:
    if isinstance(e, LinkageEdge):
        return e
    if isinstance(e, Mapping):
        return LinkageEdge(int(e["i"]), int(e["j"]), tuple(tuple(map(int, p)) for p in e["pairs"]))
    i, j, pairs = e
    return LinkageEdge(int(i), int(j), tuple((int(a), int(b)) for a, b in pairs))


def build_graph(dims: Sequence[int], edges: Iterable = ()) -> LinkageGraph:
    """Validate dimensions and edges and return an immutable graph.

    Edges may be :class:`LinkageEdge` instances or ``(i, j, pairs)`` tuples.
    They are normalized so that ``i < j`` and sorted by endpoint pair.
    """
    dims = tuple(int(d) for d in dims)
    if not dims:
        raise GraphError("a linkage graph needs at least one learner")
    if any(d < 1 for d in dims):
        raise GraphError(f"every learner needs at least one parameter, got dims={dims}")
    M = len(dims)
    seen: dict[tuple[int, int], LinkageEdge] = {}
    for raw in edges:
        e = _as_edge(raw)
        for v in (e.i, e.j):
            if not 0 <= v < M:
                raise InvalidLearner(f"learner id {v} out of range for M={M}")
        if e.i == e.j:
            raise SelfLoop(f"edge links learner {e.i} to itself")
        if not e.pairs:
            raise GraphError(f"edge ({e.i}, {e.j}) has no slot pairs")
        for si, sj in e.pairs:
            if not 0 <= si < dims[e.i]:
                raise OutOfRangeSlot(f"slot {si} out of range for learner {e.i} (p={dims[e.i]})")
            if not 0 <= sj < dims[e.j]:
                raise OutOfRangeSlot(f"slot {sj} out of range for learner {e.j} (p={dims[e.j]})")
        left = [p[0] for p in e.pairs]
        right = [p[1] for p in e.pairs]
        if len(set(left)) != len(left) or len(set(right)) != len(right):
            raise GraphError(f"edge ({e.i}, {e.j}) repeats a slot")
        e = e.normalized()
        if e.key in seen:
            raise DuplicateEdge(f"more than one edge between learners {e.key}")
        seen[e.key] = e
    ordered = tuple(seen[k] for k in sorted(seen))
    return LinkageGraph(dims, ordered)


def _check_ids(g: LinkageGraph, ids: Iterable[int]) -> list[int]:
    ids = [int(v) for v in ids]
    for v in ids:
        if not 0 <= v < g.M:
            raise InvalidLearner(f"learner id {v} out of range for M={g.M}")
    return ids


def connected_component(g: LinkageGraph, root: int) -> list[int]:
    """Learners reachable from ``root`` (including it), sorted ascending."""
    (root,) = _check_ids(g, [root])
    seen = {root}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for w in g.adjacent(v):
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return sorted(seen)


def neighbors(g: LinkageGraph, zeta: Iterable[int]) -> list[int]:
    """Learners outside ``zeta`` with at least one edge into ``zeta``."""
    zeta = set(_check_ids(g, zeta))
    out = set()
    for v in zeta:
        out |= g.adjacent(v)
    return sorted(out - zeta)


def induced_edges(g: LinkageGraph, vertex_set: Iterable[int]) -> list[LinkageEdge]:
    vs = set(_check_ids(g, vertex_set))
    return [e for e in g.edges if e.i in vs and e.j in vs]


class UnionFind:
    """Disjoint sets over hashable items, path compression plus union by rank."""

    def __init__(self, items: Iterable = ()):
        self.parent = {}
        self.rank = {}
        for x in items:
            self.add(x)

    def add(self, x):
        if x not in self.parent:
            self.parent[x] = x
            self.rank[x] = 0

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True

    def groups(self) -> list[list]:
        out: dict = {}
        for x in self.parent:
            out.setdefault(self.find(x), []).append(x)
        return [sorted(v) for v in out.values()]


@dataclass(frozen=True)
class TiedParameterSpace:
    """Deduplicated global coordinates for a set of tied learners.

    ``slot_map[(learner, slot)]`` gives the global index. ``classes`` lists
    the (learner, slot) members of every global coordinate in index order.
    """

    vertex_set: tuple[int, ...]
    dim: int
    slot_map: Mapping[tuple[int, int], int]
    classes: tuple[tuple[tuple[int, int], ...], ...]
    _index: Mapping[int, np.ndarray] = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        idx = {}
        for v in self.vertex_set:
            slots = sorted(s for (w, s) in self.slot_map if w == v)
            arr = np.array([self.slot_map[(v, s)] for s in slots], dtype=np.intp)
            arr.setflags(write=False)
            idx[v] = arr
        object.__setattr__(self, "_index", idx)

    def indices(self, learner: int) -> np.ndarray:
        """Global index of each slot of ``learner``, in slot order."""
        return self._index[learner]

    @property
    def n_merges(self) -> int:
        return sum(len(c) - 1 for c in self.classes)


def tie_parameters(g: LinkageGraph, vertex_set: Iterable[int]) -> TiedParameterSpace:
    """Merge slots connected through edges inside ``vertex_set``.

    Global indices are assigned in ascending order of each class's smallest
    (learner, slot) member, which makes the labeling independent of the
    edge order.
    """
    vs = sorted(set(_check_ids(g, vertex_set)))
    if not vs:
        raise GraphError("vertex_set must be non-empty")
    uf = UnionFind((v, s) for v in vs for s in range(g.dims[v]))
    for e in induced_edges(g, vs):
        for si, sj in e.pairs:
            uf.union((e.i, si), (e.j, sj))
    classes = sorted((tuple(c) for c in uf.groups()), key=lambda c: c[0])
    slot_map = {member: k for k, cls in enumerate(classes) for member in cls}
    return TiedParameterSpace(tuple(vs), len(classes), slot_map, tuple(classes))


def graph_from_dict(doc: Mapping) -> LinkageGraph:
    """Parse the on-disk JSON layout (1-based learner ids)."""
    try:
        dims = list(doc["dims"])
        raw = doc.get("edges", [])
        edges = []
        for e in raw:
            pairs = [(int(a), int(b)) for a, b in e["pairs"]]
            edges.append(LinkageEdge(int(e["i"]) - 1, int(e["j"]) - 1, tuple(pairs)))
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphError(f"malformed graph document: {exc!r}") from exc
    return build_graph(dims, edges)


def graph_to_dict(g: LinkageGraph) -> dict:
    return {
        "dims": list(g.dims),
        "edges": [{"i": e.i + 1, "j": e.j + 1, "pairs": [list(p) for p in e.pairs]} for e in g.edges],
    }


def load_graph(path) -> LinkageGraph:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise GraphError(f"cannot read graph file {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise GraphError(f"{path}: invalid JSON ({exc})") from exc
    return graph_from_dict(doc)
