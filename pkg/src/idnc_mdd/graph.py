"""IDNC graph: one vertex per (receiver, wanted packet), edges between vertices
whose XOR is instantly decodable for both receivers.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from . import _kernels
from .state import FeedbackMatrix, Kind, classify_combination, ReceiverState

DEFAULT_ENUMERATION_BOUND = 25


class ResourceLimitError(RuntimeError):
    pass


class Vertex(NamedTuple):
    receiver: int
    packet: int

    def __str__(self) -> str:
        return f"{self.receiver}:{self.packet}"


def adjacency_matrix(entries: np.ndarray, rec: np.ndarray, pkt: np.ndarray) -> np.ndarray:
    """Pairwise adjacency for vertex arrays ``rec``/``pkt`` under feedback ``entries``.

    v_ij ~ v_kl  iff  i != k  and  (j == l  or  (j in H_k and l in H_i)).
    """
    return _kernels.adjacency(np.ascontiguousarray(entries, dtype=np.uint8),
                              np.asarray(rec, dtype=np.int64), np.asarray(pkt, dtype=np.int64))


class IdncGraph:
    """Vertex set plus a symmetric boolean adjacency matrix.

    Vertices are kept in (receiver, packet) lexicographic order. Subgraphs keep a
    reference to the feedback entries so that adjacency to any vertex of the
    global graph can still be evaluated (needed when restricting a layer against
    clique members that live in other layers).
    """

    def __init__(self, entries: np.ndarray, rec: np.ndarray, pkt: np.ndarray,
                 adj: np.ndarray | None = None, complete: bool = False) -> None:
        self.entries = entries
        self._complete = complete
        self.rec = np.asarray(rec, dtype=np.int64)
        self.pkt = np.asarray(pkt, dtype=np.int64)
        self._adj = adj

    @property
    def adj(self) -> np.ndarray:
        # built on first use; the greedy policies never need it
        if self._adj is None:
            self._adj = adjacency_matrix(self.entries, self.rec, self.pkt)
        return self._adj

    @property
    def present(self) -> np.ndarray:
        """M x N 0/1 matrix marking which (receiver, packet) vertices this graph holds."""
        if self._complete:
            return self.entries
        out = np.zeros_like(self.entries, dtype=np.uint8)
        out[self.rec, self.pkt] = 1
        return out

    def __len__(self) -> int:
        return len(self.rec)

    def __bool__(self) -> bool:
        return len(self.rec) > 0

    @property
    def vertices(self) -> list[Vertex]:
        return [Vertex(int(i), int(j)) for i, j in zip(self.rec, self.pkt)]

    def index(self, v: Vertex) -> int:
        hit = np.flatnonzero((self.rec == v[0]) & (self.pkt == v[1]))
        if hit.size == 0:
            raise KeyError(v)
        return int(hit[0])

    def __contains__(self, v) -> bool:
        return bool(((self.rec == v[0]) & (self.pkt == v[1])).any())

    def edges(self) -> list[tuple[Vertex, Vertex]]:
        a, b = np.nonzero(np.triu(self.adj, 1))
        vs = self.vertices
        return [(vs[x], vs[y]) for x, y in zip(a, b)]

    def adjacent(self, u: Vertex, v: Vertex) -> bool:
        (i, j), (k, l) = u, v
        if i == k:
            return False
        return j == l or (self.entries[k, j] == 0 and self.entries[i, l] == 0)

    def neighbour_mask(self, v: Vertex) -> np.ndarray:
        """Adjacency of ``v`` (any vertex of the global graph) to this graph's vertices."""
        i, j = v
        f = self.entries
        mask = (self.pkt == j) | ((f[self.rec, j] == 0) & (f[i, self.pkt] == 0))
        mask &= self.rec != i
        return mask

    def subgraph(self, idx) -> "IdncGraph":
        idx = np.asarray(idx, dtype=np.intp)
        adj = None if self._adj is None else self._adj[np.ix_(idx, idx)]
        return IdncGraph(self.entries, self.rec[idx], self.pkt[idx], adj)

    def to_edge_list(self) -> str:
        """Plain-text adjacency list, one ``i:j -- k:l`` edge per line."""
        return "".join(f"{u} -- {v}\n" for u, v in self.edges())


def build_graph(matrix: FeedbackMatrix) -> IdncGraph:
    rec, pkt = np.nonzero(matrix.entries)
    return IdncGraph(matrix.entries, rec, pkt, complete=True)


def restrict_to_neighbors(graph: IdncGraph, v: Vertex) -> IdncGraph:
    return graph.subgraph(np.flatnonzero(graph.neighbour_mask(v)))


@dataclass(frozen=True)
class LayerPartition:
    layers: tuple[IdncGraph, ...]
    delays: tuple[int, ...]

    @property
    def h(self) -> int:
        return len(self.layers)


def layer_indices(rec: np.ndarray, delays) -> list[np.ndarray]:
    """Vertex indices grouped by their receiver's delay, largest delay first."""
    d = np.asarray(delays)[rec]
    return [np.flatnonzero(d == level) for level in np.unique(d)[::-1]]


def partition_layers(graph: IdncGraph, delays: Mapping[int, int] | Sequence[int]) -> LayerPartition:
    if isinstance(delays, Mapping):
        missing = {int(i) for i in graph.rec} - set(delays)
        if missing:
            raise ValueError(f"no delay given for receivers {sorted(missing)}")
        lookup = np.zeros(int(graph.rec.max()) + 1 if len(graph) else 0, dtype=np.int64)
        for i in set(int(i) for i in graph.rec):
            lookup[i] = delays[i]
    else:
        lookup = np.asarray(delays, dtype=np.int64)
        if len(graph) and graph.rec.max() >= len(lookup):
            raise ValueError("no delay given for some receivers of the graph")
    groups = layer_indices(graph.rec, lookup) if len(graph) else []
    return LayerPartition(tuple(graph.subgraph(g) for g in groups),
                          tuple(int(lookup[graph.rec[g[0]]]) for g in groups))


@dataclass(frozen=True, order=True)
class Clique:
    members: tuple[Vertex, ...]

    @classmethod
    def of(cls, vertices: Iterable) -> "Clique":
        return cls(tuple(sorted(Vertex(int(i), int(j)) for i, j in vertices)))

    @property
    def combo(self) -> frozenset[int]:
        return frozenset(v.packet for v in self.members)

    @property
    def targeted(self) -> frozenset[int]:
        return frozenset(v.receiver for v in self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


def clique_problems(graph: IdncGraph, clique: Clique, maximal: bool = True) -> list[str]:
    """Everything wrong with ``clique`` as a transmission on ``graph``; empty if valid.

    Checks membership, one vertex per receiver, pairwise adjacency, that every
    member receiver can instantly decode the combination and, optionally, that no
    outside vertex is adjacent to all members.
    """
    problems = []
    members = list(clique.members)
    for v in members:
        if v not in graph:
            problems.append(f"{v} is not a vertex")
    if len({v.receiver for v in members}) != len(members):
        problems.append("two members share a receiver")
    for a in range(len(members)):
        for b in range(a + 1, len(members)):
            if not graph.adjacent(members[a], members[b]):
                problems.append(f"{members[a]} and {members[b]} are not adjacent")
    if members:
        combo = clique.combo
        fm = FeedbackMatrix(graph.entries)
        for v in members:
            got = classify_combination(combo, ReceiverState.from_matrix(fm, v.receiver, 0.0))
            if got.kind is not Kind.INSTANTLY_DECODABLE or got.packet != v.packet:
                problems.append(f"receiver {v.receiver} cannot instantly decode {sorted(combo)}")
    if maximal and not problems:
        inside = set(members)
        for u in graph.vertices:
            if u not in inside and all(graph.adjacent(u, v) for v in members):
                problems.append(f"{u} extends the clique")
                break
    return problems


def enumerate_maximal_cliques(graph: IdncGraph,
                              bound: int = DEFAULT_ENUMERATION_BOUND) -> list[Clique]:
    """All inclusion-maximal cliques (Bron-Kerbosch with pivoting), sorted."""
    n = len(graph)
    if n > bound:
        raise ResourceLimitError(
            f"graph has {n} vertices, exhaustive enumeration is limited to {bound}")
    if n == 0:
        return []
    nbr = [sum(1 << int(b) for b in np.flatnonzero(graph.adj[a])) for a in range(n)]
    found: list[int] = []

    def expand(r: int, p: int, x: int) -> None:
        if not p and not x:
            found.append(r)
            return
        px = p | x
        pivot = max((u for u in range(n) if px >> u & 1), key=lambda u: bin(p & nbr[u]).count("1"))
        cand = p & ~nbr[pivot]
        while cand:
            low = cand & -cand
            u = low.bit_length() - 1
            expand(r | low, p & nbr[u], x & nbr[u])
            p &= ~low
            x |= low
            cand &= ~low

    expand(0, (1 << n) - 1, 0)
    vs = graph.vertices
    return sorted(Clique.of(vs[u] for u in range(n) if r >> u & 1) for r in found)
