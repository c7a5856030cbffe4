"""Virtual time source shared by the world, firmware and broker."""

from __future__ import annotations


class SimClock:
    """Deterministic tick-stepped clock.

    Time is carried as an integer tick count; ``now`` is derived from it and
    rounded to nanoseconds so that grid timestamps (15.0, 20.0, ...) come out
    as clean decimals regardless of how many ticks were taken to reach them.
    Nothing in the core logic reads the wall clock; live runs pace this same
    clock against wall time (see ``feedersim.live``), so headless and live
    semantics are identical.
    """

    __slots__ = ("tick", "ticks")

    def __init__(self, tick: float = 0.01):
        if tick <= 0:
            raise ValueError("tick must be positive")
        self.tick = tick
        self.ticks = 0

    @property
    def now(self) -> float:
        """Current virtual time in seconds."""
        return round(self.ticks * self.tick, 9)

    def advance(self) -> float:
        """Step one tick forward and return the new time."""
        self.ticks += 1
        return self.now
