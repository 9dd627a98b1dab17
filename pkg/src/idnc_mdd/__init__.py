"""Instantly decodable network coding over broadcast erasure channels:
max-decoding-delay and sum-decoding-delay packet selection, plus a frame simulator."""

from .channel import ExperimentStats, FrameResult, SimConfig, run_experiment
from .graph import Clique, IdncGraph, Vertex, build_graph
from .policies import PolicyKind, select_clique_exact, select_clique_mdd, select_clique_sdd
from .state import FeedbackMatrix, ReceiverState

__all__ = [
    "Clique", "ExperimentStats", "FeedbackMatrix", "FrameResult", "IdncGraph", "PolicyKind",
    "ReceiverState", "SimConfig", "Vertex", "build_graph", "run_experiment",
    "select_clique_exact", "select_clique_mdd", "select_clique_sdd",
]
