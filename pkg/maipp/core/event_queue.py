"""Priority queue ordering asynchronous agent arrivals."""

from __future__ import annotations

import heapq
from typing import List, Optional, Tuple


class EventQueue:
    """A min-heap of ``(time, agent_id)`` arrival events.

    Ties in time are broken by agent id, which makes the serialization of
    simultaneous decisions deterministic.
    """

    def __init__(self) -> None:
        self._queue: List[Tuple[float, int]] = []

    def push(self, time: float, agent_id: int) -> None:
        heapq.heappush(self._queue, (time, agent_id))

    def pop(self) -> Optional[Tuple[float, int]]:
        if not self._queue:
            return None
        return heapq.heappop(self._queue)

    def peek_time(self) -> Optional[float]:
        return self._queue[0][0] if self._queue else None

    def empty(self) -> bool:
        return len(self._queue) == 0

    def __len__(self) -> int:
        return len(self._queue)
