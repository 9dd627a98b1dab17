"""Frame-level broadcast erasure channel simulation.

A frame is an uncoded initial phase followed by IDNC recovery transmissions
chosen by a policy, until every receiver holds every packet (or a safety cap is
hit). Erasure outcomes are drawn from per-(frame, transmission, receiver)
substreams, so two policies facing the same state see the same channel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import Clique, build_graph
from .policies import PolicyKind, select
from .state import FeedbackMatrix, FrameState

_STREAM_FRAME = 0
_STREAM_RECOVERY = 1
_DRAW_CHUNK = 64
# half-width cap of the per-frame erasure spread; see draw_frame_erasures
DEFAULT_SPREAD = 0.3


@dataclass
class SimConfig:
    receivers: int
    packets: int
    erasure: float
    deadline: float = math.inf
    frames: int = 1000
    seed: int = 0
    policy: PolicyKind = PolicyKind.MDD_GREEDY
    max_transmissions: int | None = None
    spread: float = DEFAULT_SPREAD

    def __post_init__(self) -> None:
        if isinstance(self.policy, str):
            self.policy = PolicyKind(self.policy)
        if self.receivers < 1 or self.packets < 1:
            raise ValueError("receivers and packets must be positive")
        if not 0.0 <= self.erasure <= 1.0:
            raise ValueError(f"average erasure probability {self.erasure} outside [0, 1]")
        if not 0.0 <= self.spread <= 0.5:
            raise ValueError(f"erasure spread {self.spread} outside [0, 0.5]")
        if self.deadline < 0:
            raise ValueError("deadline must be non-negative")
        if self.frames < 1:
            raise ValueError("at least one frame is required")
        if self.max_transmissions is None:
            self.max_transmissions = 100 * self.packets
        if self.max_transmissions < self.packets:
            raise ValueError("max_transmissions must be at least the packet count")


@dataclass
class FrameResult:
    per_receiver_delay: np.ndarray
    completed: np.ndarray
    recovery_transmissions: int
    deadline: float = math.inf
    x_events: int = 0

    @property
    def sum_delay(self) -> int:
        return int(self.per_receiver_delay.sum())

    @property
    def max_delay(self) -> int:
        return int(self.per_receiver_delay.max())

    @property
    def incomplete(self) -> bool:
        return not bool(self.completed.all())

    def served(self, deadline: float) -> int:
        return int((self.completed & (self.per_receiver_delay <= deadline)).sum())

    @property
    def served_count(self) -> int:
        return self.served(self.deadline)


@dataclass
class ExperimentStats:
    mean_sum_delay: float
    mean_max_delay: float
    mean_served_fraction: float
    mean_recovery_transmissions: float
    frame_count: int
    incomplete_frames: int = 0

    @classmethod
    def from_frames(cls, frames: Sequence[FrameResult], deadline: float) -> "ExperimentStats":
        if not frames:
            raise ValueError("no frames to aggregate")
        M = len(frames[0].per_receiver_delay)
        return cls(
            mean_sum_delay=float(np.mean([f.sum_delay for f in frames])),
            mean_max_delay=float(np.mean([f.max_delay for f in frames])),
            mean_served_fraction=float(np.mean([f.served(deadline) / M for f in frames])),
            mean_recovery_transmissions=float(np.mean([f.recovery_transmissions for f in frames])),
            frame_count=len(frames),
            incomplete_frames=sum(f.incomplete for f in frames),
        )


def frame_rng(seed: int, frame: int, stream: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed % 2**64, spawn_key=(frame, stream))
    return np.random.default_rng(ss)


class ErasureDraws:
    """Uniform variates u[t, i] for transmission t and receiver i.

    Receiver i misses transmission t iff u[t, i] < p_i. Rows are produced in
    chunks from one generator, so row t never depends on how the rows are consumed.
    """

    def __init__(self, rng: np.random.Generator, receivers: int) -> None:
        self._rng = rng
        self._M = receivers
        self._rows = np.empty((0, receivers))

    def row(self, t: int) -> np.ndarray:
        while t >= len(self._rows):
            self._rows = np.vstack([self._rows, self._rng.random((_DRAW_CHUNK, self._M))])
        return self._rows[t]


def draw_frame_erasures(P: float, M: int, rng: np.random.Generator,
                        spread: float = DEFAULT_SPREAD) -> np.ndarray:
    """Per-receiver erasure probabilities, uniform on [P - d, P + d], d = min(P, 1 - P, spread).

    The mean is exactly P for every spread. A wider spread makes the receivers more
    heterogeneous, which is what separates the two policies at high P.
    """
    if not 0.0 <= P <= 1.0:
        raise ValueError(f"average erasure probability {P} outside [0, 1]")
    d = min(P, 1.0 - P, spread)
    if d == 0.0:
        return np.full(M, float(P))
    return rng.uniform(P - d, P + d, size=M)


def run_initial_phase(config: SimConfig, p: np.ndarray, rng: np.random.Generator) -> FeedbackMatrix:
    """Send every packet once, uncoded; f_ij = 1 where the packet was erased."""
    p = np.asarray(p, dtype=float)
    lost = rng.random((len(p), config.packets)) < p[:, None]
    return FeedbackMatrix(lost.astype(np.uint8))


def transmit_once(state: FrameState, clique: Clique, rng) -> tuple[FrameState, np.ndarray, bool]:
    """Broadcast the XOR of ``clique``'s packets once and update ``state`` in place.

    ``rng`` is a numpy Generator or a pre-drawn row of uniforms, one per
    receiver. Returns the state, the per-receiver delay increments and whether
    the maximum cumulative delay grew.
    """
    M = state.M
    u = rng.random(M) if isinstance(rng, np.random.Generator) else np.asarray(rng)
    received = u >= state.erasure
    increments = np.zeros(M, dtype=np.int64)
    if not len(clique):
        return state, increments, False
    before = state.delays.max()
    entries = state.feedback.entries
    combo = np.fromiter(clique.combo, dtype=np.intp)
    wanted = entries[:, combo]
    count = wanted.sum(axis=1)
    decode = received & (count == 1)
    rows = np.flatnonzero(decode)
    if rows.size:
        entries[rows, combo[wanted[rows].argmax(axis=1)]] = 0   # acknowledgement
    delayed = received & (count != 1)
    delayed &= entries.any(axis=1)
    increments[delayed] = 1
    state.delays += increments
    return state, increments, bool(state.delays.max() > before)


def run_recovery_phase(state: FrameState, policy: PolicyKind, config: SimConfig,
                       rng) -> FrameResult:
    """Transmit policy-selected cliques until all Wants sets are empty or the cap is hit.

    ``rng`` is an :class:`ErasureDraws` or a numpy Generator.
    """
    draws = rng if isinstance(rng, ErasureDraws) else ErasureDraws(rng, state.M)
    t = 0
    x_events = 0
    while t < config.max_transmissions:
        graph = build_graph(state.feedback)
        if not len(graph):
            break
        clique = select(policy, graph, state.delays, state.erasure)
        _, _, x = transmit_once(state, clique, draws.row(t))
        x_events += x
        t += 1
    completed = ~state.feedback.entries.any(axis=1)
    return FrameResult(state.delays.copy(), completed, t, config.deadline, x_events)


def run_frame(config: SimConfig, frame: int, policy: PolicyKind | None = None) -> FrameResult:
    policy = config.policy if policy is None else policy
    rng = frame_rng(config.seed, frame, _STREAM_FRAME)
    p = draw_frame_erasures(config.erasure, config.receivers, rng, config.spread)
    feedback = run_initial_phase(config, p, rng)
    state = FrameState(feedback, p)
    draws = ErasureDraws(frame_rng(config.seed, frame, _STREAM_RECOVERY), config.receivers)
    return run_recovery_phase(state, policy, config, draws)


def simulate_frames(config: SimConfig) -> list[FrameResult]:
    return [run_frame(config, k) for k in range(config.frames)]


def run_experiment(config: SimConfig) -> ExperimentStats:
    return ExperimentStats.from_frames(simulate_frames(config), config.deadline)
