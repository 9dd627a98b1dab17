"""Shared test utilities: random instances and a step-by-step reference of the
layered greedy built only from the public graph/weight operations."""
from __future__ import annotations

import numpy as np

from idnc_mdd.graph import (
    Clique,
    IdncGraph,
    build_graph,
    partition_layers,
    restrict_to_neighbors,
)
from idnc_mdd._kernels import TIE_RTOL
from idnc_mdd.policies import modified_weights, vertex_weight_mdd, vertex_weight_sdd
from idnc_mdd.state import FeedbackMatrix


def random_matrix(rng: np.random.Generator, M: int, N: int, density: float | None = None) -> FeedbackMatrix:
    density = rng.random() if density is None else density
    return FeedbackMatrix((rng.random((M, N)) < density).astype(np.uint8))


def random_instance(rng: np.random.Generator, max_m: int = 5, max_n: int = 5):
    M = int(rng.integers(1, max_m + 1))
    N = int(rng.integers(1, max_n + 1))
    F = random_matrix(rng, M, N)
    p = rng.uniform(0.0, 1.0, M)
    delays = rng.integers(0, 4, M)
    return F, p, delays


def reference_layered_greedy(graph: IdncGraph, delays, weight_of) -> Clique:
    """Layer-by-layer greedy written directly in terms of the public operations."""
    chosen = []
    for layer in partition_layers(graph, list(delays)).layers:
        g = layer
        for v in chosen:
            g = restrict_to_neighbors(g, v)
        while len(g):
            original = {v: weight_of(v.receiver) for v in g.vertices}
            w = modified_weights(g, original)
            best = None
            for v in g.vertices:        # lexicographic order
                if best is None or w[v] - w[best] > TIE_RTOL * w[best]:
                    best = v
            chosen.append(best)
            g = restrict_to_neighbors(g, best)
    return Clique.of(chosen)


def reference_mdd(graph: IdncGraph, delays, p) -> Clique:
    return reference_layered_greedy(graph, delays, lambda i: vertex_weight_mdd(float(p[i])))


def reference_sdd(graph: IdncGraph, p) -> Clique:
    flat = [0] * graph.entries.shape[0]
    return reference_layered_greedy(graph, flat, lambda i: vertex_weight_sdd(float(p[i])))


def all_cliques_brute_force(graph: IdncGraph) -> list[Clique]:
    """Every maximal clique, by checking all vertex subsets (tiny graphs only)."""
    vs = graph.vertices
    n = len(vs)
    cliques = []
    for mask in range(1, 1 << n):
        members = [vs[a] for a in range(n) if mask >> a & 1]
        if all(graph.adjacent(u, v) for x, u in enumerate(members) for v in members[x + 1:]):
            cliques.append(frozenset(members))
    maximal = [c for c in cliques if not any(c < d for d in cliques)]
    return sorted(Clique.of(c) for c in maximal)


def graph_of(rows) -> IdncGraph:
    return build_graph(FeedbackMatrix(rows))
