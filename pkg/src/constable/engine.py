"""Stable-load detection and elimination engine.

Three tables drive the mechanism:

  SLD  - PC-indexed (hashed-tag, set-associative LRU) table holding each
         load's last (address, value), a 5-bit saturating stability
         confidence, and the can_eliminate flag.
  RMT  - per-architectural-register FIFO lists of monitored load PCs; a
         write to the register clears the flags of every listed PC.
  AMT  - line-address-indexed (optionally full-address) table of monitored
         load PCs; a store or snoop to the address clears the listed flags
         and evicts the entry.

Values of in-flight eliminated loads live in a 32-entry side register file
(xPRF); when no slot is free the load executes normally.
"""

from __future__ import annotations

from dataclasses import dataclass

from .trace import LINE_SHIFT, RIP, RSP, RBP

# Rename-time decisions.
NORMAL = 0
MARK_LIKELY_STABLE = 1
ELIMINATE = 2
VALUE_AT_RENAME = 3            # oracle modes only: wake dependents, execute fully
VALUE_AT_RENAME_NO_FETCH = 4   # oracle modes only: wake dependents, stop after AGU

AMT_INDEX_LINE = "line"
AMT_INDEX_FULL = "full"


def hash_pc(pc: int) -> int:
    """24-bit fold-XOR of the 48-bit PC halves."""
    return (pc ^ (pc >> 24)) & 0xFFFFFF


@dataclass
class ConstableConfig:
    sld_sets: int = 32
    sld_ways: int = 16
    confidence_bits: int = 5
    threshold: int = 30
    rmt_stack_capacity: int = 16   # RSP and RBP
    rmt_reg_capacity: int = 8      # remaining 14 GPRs
    amt_sets: int = 32
    amt_ways: int = 8
    amt_pc_slots: int = 4
    xprf_size: int = 32
    sld_read_ports: int = 3
    sld_write_ports: int = 2
    amt_index: str = AMT_INDEX_LINE
    amt_i_mode: bool = False
    clear_confidence_on_context_switch: bool = False
    # Verification aid: named update hooks listed here are dropped, so the
    # golden check can demonstrate it catches the resulting corruption.
    fault_injection: frozenset = frozenset()

    def __post_init__(self):
        if self.threshold >= (1 << self.confidence_bits):
            raise ValueError("threshold must fit in the confidence counter")
        if self.amt_index not in (AMT_INDEX_LINE, AMT_INDEX_FULL):
            raise ValueError(f"bad amt_index {self.amt_index!r}")
        if isinstance(self.fault_injection, (list, tuple, set)):
            self.fault_injection = frozenset(self.fault_injection)


class SldEntry:
    __slots__ = ("tag", "pc", "last_addr", "last_value", "conf", "can_eliminate", "tick")

    def __init__(self, tag: int, pc: int, tick: int):
        self.tag = tag
        self.pc = pc              # shadow copy, only for collision accounting
        self.last_addr: int | None = None
        self.last_value = 0
        self.conf = 0
        self.can_eliminate = False
        self.tick = tick


class Sld:
    """Set-associative LRU table keyed by the hashed PC."""

    def __init__(self, sets: int, ways: int):
        self.n_sets = sets
        self.ways = ways
        self.sets: list[dict[int, SldEntry]] = [{} for _ in range(sets)]
        self._tick = 0

    def find(self, h: int) -> SldEntry | None:
        e = self.sets[h % self.n_sets].get(h)
        if e is not None:
            self._tick += 1
            e.tick = self._tick
        return e

    def allocate(self, h: int, pc: int) -> SldEntry:
        s = self.sets[h % self.n_sets]
        if len(s) >= self.ways:
            victim = min(s.values(), key=lambda e: e.tick)
            del s[victim.tag]
        self._tick += 1
        e = SldEntry(h, pc, self._tick)
        s[h] = e
        return e

    def clear_flag(self, h: int) -> bool:
        """Reset can_eliminate for a hashed PC; stale list entries miss."""
        e = self.sets[h % self.n_sets].get(h)
        if e is not None and e.can_eliminate:
            e.can_eliminate = False
            return True
        return False

    def entries(self):
        for s in self.sets:
            yield from s.values()


class Rmt:
    """Per-register FIFO lists of monitored load PC hashes (deduplicated)."""

    def __init__(self, stack_capacity: int, reg_capacity: int):
        self.lists: dict[int, list[int]] = {r: [] for r in range(16)}
        self.caps = {r: (stack_capacity if r in (RSP, RBP) else reg_capacity)
                     for r in range(16)}

    def insert(self, reg: int, h: int) -> int | None:
        """Append h; returns the displaced hash when the FIFO overflows."""
        lst = self.lists[reg]
        if h in lst:
            return None
        lst.append(h)
        if len(lst) > self.caps[reg]:
            return lst.pop(0)
        return None

    def take(self, reg: int) -> list[int]:
        lst = self.lists[reg]
        self.lists[reg] = []
        return lst

    def clear(self) -> None:
        for r in self.lists:
            self.lists[r] = []


class AmtEntry:
    __slots__ = ("key", "size", "pcs", "tick")

    def __init__(self, key: int, size: int, tick: int):
        self.key = key        # line address, or full byte address in full mode
        self.size = size      # monitored access size (full-address mode only)
        self.pcs: list[int] = []
        self.tick = tick


class Amt:
    """Line-indexed monitor table; entries carry a FIFO list of PC hashes."""

    def __init__(self, sets: int, ways: int, pc_slots: int, full_index: bool):
        self.n_sets = sets
        self.ways = ways
        self.pc_slots = pc_slots
        self.full_index = full_index
        self.sets: list[dict[int, AmtEntry]] = [{} for _ in range(sets)]
        self._tick = 0

    def _set_of(self, key: int) -> dict[int, AmtEntry]:
        line = key >> LINE_SHIFT if self.full_index else key
        return self.sets[line % self.n_sets]

    def find(self, key: int) -> AmtEntry | None:
        e = self._set_of(key).get(key)
        if e is not None:
            self._tick += 1
            e.tick = self._tick
        return e

    def allocate(self, key: int, size: int) -> tuple[AmtEntry, AmtEntry | None]:
        s = self._set_of(key)
        victim = None
        if len(s) >= self.ways:
            victim = min(s.values(), key=lambda e: e.tick)
            del s[victim.key]
        self._tick += 1
        e = AmtEntry(key, size, self._tick)
        s[key] = e
        return e, victim

    def insert_pc(self, entry: AmtEntry, h: int) -> int | None:
        """FIFO-append h into the entry; returns a displaced hash if full."""
        if h in entry.pcs:
            return None
        entry.pcs.append(h)
        if len(entry.pcs) > self.pc_slots:
            return entry.pcs.pop(0)
        return None

    def evict(self, entry: AmtEntry) -> None:
        self._set_of(entry.key).pop(entry.key, None)

    def matches_store(self, paddr: int, size: int) -> list[AmtEntry]:
        """Entries invalidated by a store to [paddr, paddr+size)."""
        if not self.full_index:
            e = self.find(paddr >> LINE_SHIFT)
            return [e] if e is not None else []
        out = []
        for e in list(self._set_of(paddr).values()):
            if paddr < e.key + e.size and e.key < paddr + size:
                out.append(e)
        return out

    def matches_line(self, line: int) -> list[AmtEntry]:
        """Entries invalidated by a snoop or eviction of a whole line."""
        if not self.full_index:
            e = self.find(line)
            return [e] if e is not None else []
        return [e for e in list(self.sets[line % self.n_sets].values())
                if e.key >> LINE_SHIFT == line]

    def clear(self) -> None:
        for s in self.sets:
            s.clear()


def _new_counters() -> dict:
    return {
        "sld_reads": 0,
        "sld_writes": 0,
        "rmt_reads": 0,
        "rmt_writes": 0,
        "amt_reads": 0,
        "amt_writes": 0,
        "rmt_inserts": 0,
        "amt_inserts": 0,
        "eliminations": 0,
        "xprf_full_rejections": 0,
        "sld_tag_collisions": 0,
        "amt_evictions": {"store": 0, "snoop": 0, "capacity": 0, "amt_i": 0},
        "flag_resets": {"register": 0, "store": 0, "snoop": 0, "capacity": 0,
                        "context": 0, "amt_i": 0},
    }


class BaselineEngine:
    """No-op engine: every load executes normally."""

    has_sld = False
    name = "none"

    def __init__(self):
        self.counters = _new_counters()
        self.xprf_free = 0

    def lookup_at_rename(self, rec):
        return NORMAL, 0, 0

    def on_dest_register_write(self, reg: int) -> int:
        return 0

    def on_writeback(self, pc, paddr, value, was_likely_stable, srcs=(), size=1):
        pass

    def on_store_resolved(self, paddr: int, size: int = 1) -> None:
        pass

    def on_snoop(self, line: int) -> None:
        pass

    def on_amt_invalidate(self, line: int) -> None:
        pass

    def on_context_switch(self) -> None:
        pass

    def release_xprf(self) -> None:
        pass


class ConstableEngine(BaselineEngine):
    """The trained elimination engine; owned by exactly one core simulation."""

    has_sld = True
    name = "constable"

    def __init__(self, config: ConstableConfig | None = None, memsys=None):
        super().__init__()
        self.cfg = config or ConstableConfig()
        self.sld = Sld(self.cfg.sld_sets, self.cfg.sld_ways)
        self.rmt = Rmt(self.cfg.rmt_stack_capacity, self.cfg.rmt_reg_capacity)
        self.amt = Amt(self.cfg.amt_sets, self.cfg.amt_ways, self.cfg.amt_pc_slots,
                       full_index=(self.cfg.amt_index == AMT_INDEX_FULL))
        self.memsys = memsys
        self.xprf_free = self.cfg.xprf_size
        self.sld_read_ports = self.cfg.sld_read_ports
        self.sld_write_ports = self.cfg.sld_write_ports

    def attach_memsys(self, memsys) -> None:
        self.memsys = memsys

    # -- rename stage -----------------------------------------------------

    def lookup_at_rename(self, rec):
        """Decide the fate of a load at rename.

        The decision may use only the PC; addresses and values come from the
        table state trained by earlier writebacks, never from the record.
        """
        c = self.counters
        c["sld_reads"] += 1
        h = hash_pc(rec.pc)
        e = self.sld.find(h)
        if e is None:
            self.sld.allocate(h, rec.pc)
            c["sld_writes"] += 1
            return NORMAL, 0, 0
        if e.pc != rec.pc:
            c["sld_tag_collisions"] += 1
            e.pc = rec.pc
        if e.can_eliminate:
            if self.xprf_free > 0:
                self.xprf_free -= 1
                c["eliminations"] += 1
                return ELIMINATE, e.last_value, e.last_addr
            c["xprf_full_rejections"] += 1
            return NORMAL, 0, 0
        if e.conf >= self.cfg.threshold:
            return MARK_LIKELY_STABLE, 0, 0
        return NORMAL, 0, 0

    def on_dest_register_write(self, reg: int) -> int:
        """Flush RMT[reg]; each listed PC costs one SLD write port slot."""
        if reg is None or reg == RIP:
            return 0
        c = self.counters
        c["rmt_reads"] += 1
        pcs = self.rmt.take(reg)
        if not pcs:
            return 0
        c["rmt_writes"] += 1
        if "register_hook" in self.cfg.fault_injection:
            return 0
        for h in pcs:
            c["sld_writes"] += 1
            if self.sld.clear_flag(h):
                c["flag_resets"]["register"] += 1
        return len(pcs)

    # -- writeback stage ---------------------------------------------------

    def on_writeback(self, pc, paddr, value, was_likely_stable, srcs=(), size=1):
        """Train the SLD with a completed, non-eliminated load.

        On an address+value match the confidence saturates upward; any
        mismatch halves it and re-records the pair.  A likely-stable load
        that matched additionally arms elimination: flag set, PC inserted
        into the RMT lists of its non-RIP sources and into the AMT entry
        covering its address, and the line's CV bit pinned.
        """
        c = self.counters
        c["sld_reads"] += 1
        h = hash_pc(pc)
        e = self.sld.find(h)
        if e is None:
            e = self.sld.allocate(h, pc)
        matched = e.last_addr == paddr and e.last_value == value
        if matched:
            if e.conf < (1 << self.cfg.confidence_bits) - 1:
                e.conf += 1
        else:
            e.conf //= 2
            e.last_addr = paddr
            e.last_value = value
        c["sld_writes"] += 1
        if not (was_likely_stable and matched):
            return
        e.can_eliminate = True
        c["sld_writes"] += 1
        for reg in srcs:
            if reg == RIP:
                continue
            displaced = self.rmt.insert(reg, h)
            c["rmt_inserts"] += 1
            c["rmt_writes"] += 1
            if displaced is not None:
                self._on_rmt_displacement(displaced)
        self._amt_insert(paddr, size, h)
        if not self.cfg.amt_i_mode and self.memsys is not None:
            self.memsys.pin_cv(paddr >> LINE_SHIFT)

    def _on_rmt_displacement(self, h: int) -> None:
        # A PC without a monitored source register must not stay eliminable.
        c = self.counters
        c["sld_writes"] += 1
        if self.sld.clear_flag(h):
            c["flag_resets"]["capacity"] += 1

    def _amt_insert(self, paddr: int, size: int, h: int) -> None:
        c = self.counters
        key = paddr if self.amt.full_index else paddr >> LINE_SHIFT
        c["amt_reads"] += 1
        entry = self.amt.find(key)
        if entry is None:
            entry, victim = self.amt.allocate(key, size)
            c["amt_writes"] += 1
            if victim is not None:
                self._reset_entry_pcs(victim, "capacity")
                c["amt_evictions"]["capacity"] += 1
        displaced = self.amt.insert_pc(entry, h)
        c["amt_inserts"] += 1
        c["amt_writes"] += 1
        if displaced is not None:
            c["sld_writes"] += 1
            if self.sld.clear_flag(displaced):
                c["flag_resets"]["capacity"] += 1

    # -- invalidation paths -------------------------------------------------

    def _reset_entry_pcs(self, entry: AmtEntry, bucket: str) -> None:
        c = self.counters
        for h in entry.pcs:
            c["sld_writes"] += 1
            if self.sld.clear_flag(h):
                c["flag_resets"][bucket] += 1

    def on_store_resolved(self, paddr: int, size: int = 1) -> None:
        if "store_hook" in self.cfg.fault_injection:
            return
        c = self.counters
        c["amt_reads"] += 1
        for entry in self.amt.matches_store(paddr, size):
            self._reset_entry_pcs(entry, "store")
            self.amt.evict(entry)
            c["amt_evictions"]["store"] += 1
            c["amt_writes"] += 1

    def on_snoop(self, line: int) -> None:
        if "snoop_hook" in self.cfg.fault_injection:
            return
        c = self.counters
        c["amt_reads"] += 1
        for entry in self.amt.matches_line(line):
            self._reset_entry_pcs(entry, "snoop")
            self.amt.evict(entry)
            c["amt_evictions"]["snoop"] += 1
            c["amt_writes"] += 1

    def on_amt_invalidate(self, line: int) -> None:
        c = self.counters
        c["amt_reads"] += 1
        for entry in self.amt.matches_line(line):
            self._reset_entry_pcs(entry, "amt_i")
            self.amt.evict(entry)
            c["amt_evictions"]["amt_i"] += 1
            c["amt_writes"] += 1

    def on_context_switch(self) -> None:
        c = self.counters
        for e in self.sld.entries():
            if e.can_eliminate:
                e.can_eliminate = False
                c["flag_resets"]["context"] += 1
                c["sld_writes"] += 1
            if self.cfg.clear_confidence_on_context_switch:
                e.conf = 0
        self.rmt.clear()
        self.amt.clear()

    # -- bookkeeping ---------------------------------------------------------

    def release_xprf(self) -> None:
        self.xprf_free += 1
        if self.xprf_free > self.cfg.xprf_size:
            raise AssertionError("xPRF over-release")

    def sld_entry(self, pc: int) -> SldEntry | None:
        """Introspection helper for tests and debugging."""
        return self.sld.sets[hash_pc(pc) % self.sld.n_sets].get(hash_pc(pc))
