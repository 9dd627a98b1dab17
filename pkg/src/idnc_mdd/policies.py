"""Vertex weights, delay-increase objectives and clique selection policies."""
from __future__ import annotations

import math
from enum import Enum
from typing import Iterable, Mapping

import numpy as np

from . import _kernels
from .graph import (
    DEFAULT_ENUMERATION_BOUND,
    Clique,
    IdncGraph,
    Vertex,
    enumerate_maximal_cliques,
)

EPS = 1e-6


class PolicyKind(Enum):
    MDD_GREEDY = "mdd"
    SDD_GREEDY = "sdd"
    MDD_EXACT = "mdd-exact"
    SDD_EXACT = "sdd-exact"

    @property
    def exact(self) -> bool:
        return self in (PolicyKind.MDD_EXACT, PolicyKind.SDD_EXACT)


def _check_prob(p: float) -> None:
    if not 0.0 <= p <= 1.0 or math.isnan(p):
        raise ValueError(f"probability {p} outside [0, 1]")


def vertex_weight_mdd(p: float) -> float:
    """-ln(p), with p clamped below at 1e-6 so the weight stays finite."""
    _check_prob(p)
    return -math.log(max(p, EPS)) if p < 1.0 else 0.0


def vertex_weight_sdd(p: float) -> float:
    """Reception probability 1 - p."""
    _check_prob(p)
    return 1.0 - p


def _as_array(values, size: int | None = None) -> np.ndarray:
    if isinstance(values, Mapping):
        n = max(values) + 1 if values else 0
        if size is not None:
            n = max(n, size)
        out = np.full(n, np.nan)
        for k, v in values.items():
            out[k] = v
        return out
    return np.asarray(values, dtype=float)


def _mdd_weights(p: np.ndarray) -> np.ndarray:
    if np.any((p < 0) | (p > 1)):
        raise ValueError("erasure probabilities must lie in [0, 1]")
    return -np.log(np.clip(p, EPS, 1.0))


def _sdd_weights(p: np.ndarray) -> np.ndarray:
    if np.any((p < 0) | (p > 1)):
        raise ValueError("erasure probabilities must lie in [0, 1]")
    return 1.0 - p


def modified_weights(graph: IdncGraph, original: Mapping[Vertex, float]) -> dict[Vertex, float]:
    """w = (w* + 1) * (sum of w* over the vertex's neighbours inside ``graph``)."""
    vs = graph.vertices
    w_star = np.array([original[v] for v in vs], dtype=float)
    w = _kernels.modified(graph.adj, w_star, np.arange(len(vs), dtype=np.int64))
    return {v: float(x) for v, x in zip(vs, w)}


def prob_max_delay_increase(clique: Clique, max_layer_receivers: Iterable[int],
                            wanting: Iterable[int], p) -> float:
    """Probability that the maximum decoding delay grows when ``clique`` is sent."""
    exposed = (set(max_layer_receivers) & set(wanting)) - clique.targeted
    prod = 1.0
    for i in sorted(exposed):
        prod *= p[i]
    return 1.0 - prod


def expected_sum_delay_increase(clique: Clique, wanting: Iterable[int], p) -> float:
    exposed = set(wanting) - clique.targeted
    return float(sum(1.0 - p[i] for i in sorted(exposed)))


def _delay_array(delays, M: int) -> np.ndarray:
    if isinstance(delays, Mapping):
        out = np.zeros(M, dtype=np.int64)
        for k, v in delays.items():
            out[k] = v
        return out
    return np.asarray(delays, dtype=np.int64)


def select_clique_mdd(global_graph: IdncGraph, delays, p) -> Clique:
    """Multilayer greedy maximum-weight vertex search.

    Layers are processed from the highest cumulative delay downwards. A layer's
    working graph is first cut down to the common neighbours of everything
    already chosen; then the vertex with the largest modified weight is taken
    and the working graph shrinks to its neighbours, until it is empty.
    """
    if not len(global_graph):
        return Clique(())
    M = global_graph.entries.shape[0]
    d = _delay_array(delays, M)
    levels = np.unique(d[global_graph.rec])[::-1]
    # receivers without vertices get a level no layer uses
    level = np.where(np.isin(d, levels), np.searchsorted(-levels, -d), len(levels))
    w_rec = _mdd_weights(_as_array(p, M))
    return _greedy(global_graph, w_rec, level, len(levels))


def select_clique_sdd(global_graph: IdncGraph, p) -> Clique:
    """Single-layer greedy with reception-probability weights."""
    if not len(global_graph):
        return Clique(())
    M = global_graph.entries.shape[0]
    w_rec = _sdd_weights(_as_array(p, M))
    return _greedy(global_graph, w_rec, np.zeros(M, dtype=np.int64), 1)


def _greedy(graph: IdncGraph, w_rec: np.ndarray, level: np.ndarray, h: int) -> Clique:
    entries = np.ascontiguousarray(graph.entries, dtype=np.uint8)
    rec, pkt = _kernels.greedy(entries, graph.present, w_rec.astype(float),
                               level.astype(np.int64), h)
    return Clique.of(zip(rec, pkt))


def max_delay_receivers(delays) -> set[int]:
    d = np.asarray(delays)
    if d.size == 0:
        return set()
    return set(np.flatnonzero(d == d.max()).tolist())


def select_clique_exact(global_graph: IdncGraph, delays, p, objective: PolicyKind | str,
                        bound: int = DEFAULT_ENUMERATION_BOUND) -> Clique:
    """Best maximal clique by exhaustive enumeration.

    ``objective`` is ``"mdd"`` (probability that the maximum delay grows) or
    ``"sdd"`` (expected growth of the delay sum). Ties go to the first clique in
    sorted order.
    """
    kind = objective if isinstance(objective, PolicyKind) else PolicyKind(objective)
    cliques = enumerate_maximal_cliques(global_graph, bound)
    if not cliques:
        return Clique(())
    M = global_graph.entries.shape[0]
    d = _delay_array(delays, M)
    wanting = set(np.flatnonzero(global_graph.entries.any(axis=1)).tolist())
    if kind in (PolicyKind.MDD_GREEDY, PolicyKind.MDD_EXACT):
        top = max_delay_receivers(d)
        score = [prob_max_delay_increase(c, top, wanting, p) for c in cliques]
    else:
        score = [expected_sum_delay_increase(c, wanting, p) for c in cliques]
    return cliques[int(np.argmin(score))]


def select(kind: PolicyKind, graph: IdncGraph, delays, p,
           bound: int = DEFAULT_ENUMERATION_BOUND) -> Clique:
    if kind is PolicyKind.MDD_GREEDY:
        return select_clique_mdd(graph, delays, p)
    if kind is PolicyKind.SDD_GREEDY:
        return select_clique_sdd(graph, p)
    return select_clique_exact(graph, delays, p, kind, bound)
