"""Cache hierarchy and coherence-directory model.

Two private cache levels with LRU replacement sit in front of a fixed-latency
memory.  The directory is a full map over touched lines: the core's CV bit is
considered set whenever the core holds the line in L1 or L2, and additionally
while the line is pinned.  A pinned line keeps receiving snoops even after a
clean eviction; delivering a snoop clears both the pin and the cached copies.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass

from .trace import LINE_SHIFT


@dataclass
class CacheConfig:
    l1_bytes: int = 48 * 1024
    l1_ways: int = 12
    l2_bytes: int = 2 * 1024 * 1024
    l2_ways: int = 16
    line_bytes: int = 64
    l1_latency: int = 5
    l2_latency: int = 12
    memory_latency: int = 200

    def __post_init__(self):
        if self.l1_bytes % (self.l1_ways * self.line_bytes):
            raise ValueError("L1 size not divisible by ways * line size")
        if self.l2_bytes % (self.l2_ways * self.line_bytes):
            raise ValueError("L2 size not divisible by ways * line size")


class SetAssocCache:
    """Set-associative LRU cache over line addresses (no data storage)."""

    __slots__ = ("n_sets", "ways", "sets")

    def __init__(self, total_bytes: int, ways: int, line_bytes: int):
        self.n_sets = total_bytes // (ways * line_bytes)
        self.ways = ways
        self.sets: list[OrderedDict] = [OrderedDict() for _ in range(self.n_sets)]

    def lookup(self, line: int) -> bool:
        s = self.sets[line % self.n_sets]
        if line in s:
            s.move_to_end(line)
            return True
        return False

    def fill(self, line: int) -> int | None:
        """Insert a line as MRU; returns the evicted line, if any."""
        s = self.sets[line % self.n_sets]
        if line in s:
            s.move_to_end(line)
            return None
        victim = None
        if len(s) >= self.ways:
            victim, _ = s.popitem(last=False)
        s[line] = True
        return victim

    def invalidate(self, line: int) -> bool:
        s = self.sets[line % self.n_sets]
        return s.pop(line, None) is not None

    def holds(self, line: int) -> bool:
        return line in self.sets[line % self.n_sets]


HIT_L1, HIT_L2, HIT_MEM = "l1", "l2", "mem"


class MemorySystem:
    """Single-core cache hierarchy plus the directory's CV/pin state.

    The elimination engine is attached after construction; it receives
    on_snoop for every delivered snoop and, in AMT-invalidate mode,
    on_amt_invalidate for every L1 eviction.
    """

    def __init__(self, config: CacheConfig | None = None, amt_i_mode: bool = False):
        self.cfg = config or CacheConfig()
        self.l1 = SetAssocCache(self.cfg.l1_bytes, self.cfg.l1_ways, self.cfg.line_bytes)
        self.l2 = SetAssocCache(self.cfg.l2_bytes, self.cfg.l2_ways, self.cfg.line_bytes)
        self.pinned: set[int] = set()
        self.amt_i_mode = amt_i_mode
        self.engine = None
        self.l1_hits = 0
        self.l2_hits = 0
        self.mem_fills = 0
        self.snoops_delivered = 0
        self.snoops_ignored = 0

    def attach_engine(self, engine) -> None:
        self.engine = engine

    def _evict_l1(self, victim: int | None) -> None:
        if victim is None:
            return
        # Clean eviction: the pin, if any, keeps the CV bit alive.
        if self.amt_i_mode and self.engine is not None:
            self.engine.on_amt_invalidate(victim)

    def access_load(self, paddr: int, cycle: int = 0) -> tuple[int, str]:
        """Probe the hierarchy for a load; returns (latency, hit level)."""
        line = paddr >> LINE_SHIFT
        if self.l1.lookup(line):
            self.l1_hits += 1
            return self.cfg.l1_latency, HIT_L1
        if self.l2.lookup(line):
            self.l2_hits += 1
            self._evict_l1(self.l1.fill(line))
            return self.cfg.l2_latency, HIT_L2
        self.mem_fills += 1
        self.l2.fill(line)
        self._evict_l1(self.l1.fill(line))
        return self.cfg.memory_latency, HIT_MEM

    def holds(self, line: int) -> bool:
        return self.l1.holds(line) or self.l2.holds(line)

    def cv_set(self, line: int) -> bool:
        return line in self.pinned or self.holds(line)

    def pin_cv(self, line: int, core_id: int = 0) -> None:
        self.pinned.add(line)

    def deliver_snoop(self, line: int, cycle: int = 0, core_id: int = 0) -> bool:
        """Deliver a snoop if the directory would route it to this core.

        Invalidates the local copies, clears the pin, and notifies the
        engine.  Returns False when the CV bit is clear (nothing happens).
        """
        if not self.cv_set(line):
            self.snoops_ignored += 1
            return False
        self.l1.invalidate(line)
        self.l2.invalidate(line)
        self.pinned.discard(line)
        self.snoops_delivered += 1
        if self.engine is not None:
            self.engine.on_snoop(line)
        return True

    def clear_pins(self) -> None:
        self.pinned.clear()
