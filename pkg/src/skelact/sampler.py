"""Interval sampling: the training-time clip splitter and the streaming queue.

Splitting a clip by interval k turns its frame vectors into k stride-k
subsequences that all inherit the clip label, so one clip contributes k
training sequences (and each one spans a k-times longer stretch of time).
The streaming side is a bounded FIFO: frames are pushed in, and once the
buffer is full, every emit takes the stride-k subsample starting at the
oldest buffered frame.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyResult
from .keypoints import VECTOR_SIZE, ActionLabel, SampleSequence


@dataclass(frozen=True)
class IntervalConfig:
    """Stride between sampled frames and the minimum kept sequence length.

    Length-1 sequences carry no temporal signal for a recurrent model, so
    min_len defaults to 2.
    """

    interval: int = 4
    min_len: int = 2

    def __post_init__(self):
        if self.interval < 1:
            raise ValueError(f"interval must be >= 1, got {self.interval}")
        if self.min_len < 1:
            raise ValueError(f"min_len must be >= 1, got {self.min_len}")


def split_by_interval(
    vectors, cfg: IntervalConfig, label: ActionLabel | None = None
) -> list[SampleSequence]:
    """Split a clip's frame vectors into up to ``cfg.interval`` subsequences.

    Output j holds input rows j, j+k, j+2k, ... in order, so the outputs
    partition the input before the min_len filter drops ragged stubs.
    Raises EmptyResult when nothing survives the filter, which means the
    interval is too large for a clip this short.
    """
    rows = np.asarray(vectors, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != VECTOR_SIZE:
        raise DimensionMismatch(f"expected (N, {VECTOR_SIZE}) vectors, got {rows.shape}")
    if rows.shape[0] == 0:
        raise ValueError("cannot split an empty vector list")

    k = cfg.interval
    out = []
    for j in range(k):
        part = rows[j::k]
        if part.shape[0] >= cfg.min_len:
            out.append(SampleSequence(part.copy(), label=label))
    if not out:
        raise EmptyResult(
            f"interval {k} with min length {cfg.min_len} left no usable sequence from a "
            f"{rows.shape[0]}-frame clip; pick a smaller interval (2 or 3 suit short clips)"
        )
    return out


class StreamWindow:
    """Bounded FIFO of frame vectors that emits stride-sampled sequences.

    Single-owner mutable state: one producer pushes, and emit never
    mutates the buffer. The oldest vector is evicted once capacity is
    exceeded.
    """

    def __init__(self, capacity: int, interval: int):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        if interval < 1:
            raise ValueError(f"interval must be >= 1, got {interval}")
        if interval > capacity:
            raise ValueError(f"interval {interval} cannot exceed capacity {capacity}")
        self.capacity = capacity
        self.interval = interval
        self.buffer: deque[np.ndarray] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self.buffer)

    @property
    def full(self) -> bool:
        return len(self.buffer) == self.capacity

    def push(self, vector: np.ndarray) -> None:
        """Append one frame vector, evicting the oldest on overflow."""
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != (VECTOR_SIZE,):
            raise DimensionMismatch(f"expected a ({VECTOR_SIZE},) vector, got {vector.shape}")
        self.buffer.append(vector)

    def emit(self) -> SampleSequence | None:
        """Stride-sample the full buffer, or return None before it fills.

        Takes buffer positions 0, k, 2k, ... (the oldest frame first), so a
        full capacity-50 window with interval 10 emits the 1st, 11th, 21st,
        31st and 41st buffered vectors. Read-only on the buffer.
        """
        if not self.full:
            return None
        rows = list(self.buffer)[0 :: self.interval]
        return SampleSequence(np.stack(rows))
