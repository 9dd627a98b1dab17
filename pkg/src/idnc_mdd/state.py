"""Sender-side knowledge of the receivers: feedback matrix, Has/Wants views,
cumulative decoding delays and per-receiver classification of XOR combinations.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Optional

import numpy as np


class ContractViolation(RuntimeError):
    """Raised when an operation is called outside its precondition."""


class Kind(Enum):
    NON_INNOVATIVE = "non-innovative"
    INSTANTLY_DECODABLE = "instantly-decodable"
    NON_INSTANTLY_DECODABLE = "non-instantly-decodable"


@dataclass(frozen=True)
class Classification:
    kind: Kind
    packet: Optional[int] = None

    @classmethod
    def non_innovative(cls) -> "Classification":
        return cls(Kind.NON_INNOVATIVE)

    @classmethod
    def instantly_decodable(cls, packet: int) -> "Classification":
        return cls(Kind.INSTANTLY_DECODABLE, int(packet))

    @classmethod
    def non_instantly_decodable(cls) -> "Classification":
        return cls(Kind.NON_INSTANTLY_DECODABLE)


class FeedbackMatrix:
    """Binary M x N matrix, 1 where receiver i still wants packet j.

    The Has/Wants sets of every receiver are read off the rows; nothing else
    stores them.
    """

    def __init__(self, entries) -> None:
        arr = np.asarray(entries)
        if arr.ndim != 2:
            raise ValueError(f"feedback matrix must be 2-D, got shape {arr.shape}")
        if arr.size and not np.isin(arr, (0, 1)).all():
            raise ValueError("feedback matrix entries must be 0 or 1")
        self.entries = arr.astype(np.uint8, copy=True)

    @property
    def M(self) -> int:
        return self.entries.shape[0]

    @property
    def N(self) -> int:
        return self.entries.shape[1]

    def wants(self, i: int) -> frozenset[int]:
        return frozenset(np.flatnonzero(self.entries[i]).tolist())

    def has(self, i: int) -> frozenset[int]:
        return frozenset(np.flatnonzero(self.entries[i] == 0).tolist())

    def wanting_receivers(self) -> np.ndarray:
        return np.flatnonzero(self.entries.any(axis=1))

    def copy(self) -> "FeedbackMatrix":
        return FeedbackMatrix(self.entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeedbackMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __repr__(self) -> str:
        return f"FeedbackMatrix({self.entries.tolist()})"


@dataclass(frozen=True)
class ReceiverState:
    id: int
    erasure_prob: float
    wants: frozenset[int]
    has: frozenset[int]
    cumulative_delay: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.erasure_prob <= 1.0:
            raise ValueError(f"erasure probability {self.erasure_prob} outside [0, 1]")
        if self.wants & self.has:
            raise ValueError("wants and has sets overlap")
        if self.cumulative_delay < 0:
            raise ValueError("cumulative delay must be non-negative")

    @classmethod
    def from_matrix(cls, matrix: FeedbackMatrix, i: int, erasure_prob: float,
                    cumulative_delay: int = 0) -> "ReceiverState":
        return cls(i, erasure_prob, matrix.wants(i), matrix.has(i), cumulative_delay)


def classify_combination(combo: Iterable[int], receiver: ReceiverState) -> Classification:
    combo = frozenset(combo)
    if not combo:
        raise ValueError("packet combination must be non-empty")
    wanted = combo & receiver.wants
    if not wanted:
        return Classification.non_innovative()
    if len(wanted) == 1:
        return Classification.instantly_decodable(next(iter(wanted)))
    return Classification.non_instantly_decodable()


def apply_reception(receiver: ReceiverState, combo: Iterable[int]) -> tuple[ReceiverState, int]:
    """Update a receiver after it successfully received ``combo``.

    Returns the new state and the decoding-delay increment (0 or 1).
    """
    cls = classify_combination(combo, receiver)
    if cls.kind is Kind.INSTANTLY_DECODABLE:
        j = cls.packet
        return replace(receiver, wants=receiver.wants - {j}, has=receiver.has | {j}), 0
    if not receiver.wants:
        return receiver, 0
    return replace(receiver, cumulative_delay=receiver.cumulative_delay + 1), 1


def update_feedback(matrix: FeedbackMatrix, receiver: int, packet: int) -> FeedbackMatrix:
    """Acknowledge ``packet`` at ``receiver``; returns a new matrix."""
    if matrix.entries[receiver, packet] != 1:
        raise ContractViolation(
            f"receiver {receiver} acknowledged packet {packet} it already holds")
    out = matrix.copy()
    out.entries[receiver, packet] = 0
    return out


def classify_all(entries: np.ndarray, combo) -> np.ndarray:
    """Number of wanted packets of ``combo`` at every receiver.

    0 means non-innovative, 1 instantly decodable, >= 2 non-instantly
    decodable. Vectorised counterpart of :func:`classify_combination`.
    """
    combo = np.unique(np.asarray(list(combo), dtype=np.intp))
    if combo.size == 0:
        raise ValueError("packet combination must be non-empty")
    return entries[:, combo].sum(axis=1, dtype=np.int64)


@dataclass
class FrameState:
    """Mutable per-frame state used by the simulator.

    ``feedback`` is the single source of truth for Has/Wants; ``delays`` holds D_i.
    """

    feedback: FeedbackMatrix
    erasure: np.ndarray
    delays: np.ndarray = field(default=None)

    def __post_init__(self) -> None:
        self.erasure = np.asarray(self.erasure, dtype=float)
        if self.erasure.shape != (self.feedback.M,):
            raise ValueError("one erasure probability per receiver is required")
        if self.delays is None:
            self.delays = np.zeros(self.feedback.M, dtype=np.int64)
        else:
            self.delays = np.asarray(self.delays, dtype=np.int64).copy()

    @property
    def M(self) -> int:
        return self.feedback.M

    @property
    def N(self) -> int:
        return self.feedback.N

    def receiver(self, i: int) -> ReceiverState:
        return ReceiverState.from_matrix(self.feedback, i, float(self.erasure[i]),
                                         int(self.delays[i]))

    def receivers(self) -> list[ReceiverState]:
        return [self.receiver(i) for i in range(self.M)]

    def wanting(self) -> np.ndarray:
        return self.feedback.wanting_receivers()

    def done(self) -> bool:
        return not self.feedback.entries.any()

    def copy(self) -> "FrameState":
        return FrameState(self.feedback.copy(), self.erasure.copy(), self.delays.copy())
