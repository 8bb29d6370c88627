"""Deterministic synthetic workload and scenario generation.

Traces are built against a live memory image, so every load record carries
the value a program-order replay would observe and the output always passes
the trace sanity check.  Identical (config, seed) pairs produce byte-identical
files.

Stable loads are synthesized as a static PC repeatedly accessing one fixed
(paddr, value) with source registers that are never overwritten; PC-relative
PCs read through RIP, stack-relative through RSP/RBP, register-relative
through r0..r3.  Pads and noise keep their registers out of that range.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field

from .trace import (ALU, LOAD, STORE, LINE_BYTES, RIP, RSP, RBP, ByteImage,
                    Trace, TraceRecord)

PC_REL = "pc_rel"
STACK_REL = "stack_rel"
REG_REL = "reg_rel"

SCENARIOS = ("pure_stable", "store_invalidate", "silent_store",
             "ordering_violation", "amt_capacity_thrash", "rmt_overflow",
             "false_sharing", "snoop_storm", "sld_port_pressure",
             "context_switch", "stable_port_bound")

# register conventions inside generated traces
PAD_REG = 7          # pad ALUs: dst=src=r7 is never a stable-load source
NOISE_DST = 9
STABLE_DST = 8
STORE_SRC = 6
CHAIN_REGS = (10, 11, 12, 13)


class InfeasibleConfig(Exception):
    pass


class UnknownScenario(Exception):
    pass


@dataclass
class GenConfig:
    n_instructions: int = 10000
    seed: int = 0
    stable_load_fraction: float = 0.5
    addressing_mode_mix: dict = field(default_factory=lambda: {
        PC_REL: 0.2, STACK_REL: 0.4, REG_REL: 0.4})
    inter_occurrence_profile: dict = field(default_factory=lambda: {
        "lt50": 0.4, "d50_250": 0.4, "gt250": 0.2})
    store_interference_rate: float = 0.0
    silent_store_rate: float = 0.0
    snoop_rate: float = 0.0
    register_overwrite_rate: float = 0.0
    ordering_violation_rate: float = 0.0
    context_switch_rate: float = 0.0
    store_rate: float = 0.04
    stable_pool: int | None = None
    ns_pool: int = 8
    stable_line_stride: int = 1

    def validate(self) -> None:
        rates = (self.stable_load_fraction, self.store_interference_rate,
                 self.silent_store_rate, self.snoop_rate,
                 self.register_overwrite_rate, self.ordering_violation_rate,
                 self.context_switch_rate, self.store_rate)
        if any(r < 0 or r > 1 for r in rates):
            raise InfeasibleConfig("rates must lie in [0, 1]")
        for group in (self.addressing_mode_mix, self.inter_occurrence_profile):
            if any(w < 0 for w in group.values()):
                raise InfeasibleConfig("weights must be nonnegative")
            if abs(sum(group.values()) - 1.0) > 1e-9:
                raise InfeasibleConfig("weight group must sum to 1")
        if self.n_instructions < 0:
            raise InfeasibleConfig("negative instruction count")
        if self.n_instructions and self.stable_load_fraction > 0:
            need = 900 if self.inter_occurrence_profile.get("gt250", 0) > 0 else 200
            if self.n_instructions < need:
                raise InfeasibleConfig(
                    f"n_instructions={self.n_instructions} too small for the "
                    f"distance profile (need >= {need})")


class TraceBuilder:
    """Accumulates records against a live memory image (ground truth)."""

    def __init__(self):
        self.records: list[TraceRecord] = []
        self.inits: list[tuple[int, bytes]] = []
        self.image = ByteImage()
        self.seq = 0
        self.instructions = 0
        self._mixed_i = 0
        self._mixed_seen: set[int] = set()

    def _next_seq(self) -> int:
        self.seq += 1
        return self.seq

    def init_qword(self, paddr: int, value: int) -> None:
        data = value.to_bytes(8, "little")
        self.inits.append((paddr, data))
        self.image.write_bytes(paddr, data)

    def load(self, pc: int, srcs: tuple, paddr: int, size: int = 8,
             dst: int = STABLE_DST) -> TraceRecord:
        value = self.image.read(paddr, size)
        rec = TraceRecord("I", self._next_seq(), pc=pc, op=LOAD, dst=dst,
                          srcs=srcs, vaddr=paddr, paddr=paddr, size=size,
                          value=value)
        self.records.append(rec)
        self.instructions += 1
        return rec

    def store(self, pc: int, srcs: tuple, paddr: int, size: int,
              value: int) -> TraceRecord:
        rec = TraceRecord("I", self._next_seq(), pc=pc, op=STORE, dst=None,
                          srcs=srcs, vaddr=paddr, paddr=paddr, size=size,
                          value=value & ((1 << (8 * size)) - 1))
        self.image.write(paddr, size, rec.value)
        self.records.append(rec)
        self.instructions += 1
        return rec

    def alu(self, pc: int, dst: int | None = PAD_REG,
            srcs: tuple = ()) -> TraceRecord:
        rec = TraceRecord("I", self._next_seq(), pc=pc, op=ALU, dst=dst,
                          srcs=srcs)
        self.records.append(rec)
        self.instructions += 1
        return rec

    def pad(self, count: int, pc: int = 0x100) -> None:
        for _ in range(count):
            self.alu(pc)

    def mixed_pad(self, count: int) -> None:
        """Pads at a mix the backend sustains at full rename width.

        Every sixth pad is a scratch load (its PC alternates between two
        addresses, so it can never look stable); the rest are ALUs.  Pure
        ALU pads oversubscribe the five ALU ports at six-wide rename and
        the growing backlog would skew cycle-accurate scenario timing.
        """
        base_line = (0xF0_0000 >> 6) + 32  # L1 sets 32..47, away from others
        for _ in range(count):
            i = self._mixed_i
            self._mixed_i += 1
            if i % 6 == 5:
                k = (i // 6) % 8
                addr = (base_line + k + 8 * ((i // 48) % 2)) * LINE_BYTES
                if addr not in self._mixed_seen:
                    self._mixed_seen.add(addr)
                    self.init_qword(addr, 0x5AD0 + k)
                self.load(0x58_0000 + 7 * k, (STORE_SRC,), addr, 8,
                          dst=NOISE_DST)
            else:
                self.alu(0x108)

    def snoop(self, line_paddr: int) -> None:
        self.records.append(TraceRecord("N", self._next_seq(),
                                        snoop_paddr=line_paddr))

    def context_switch(self) -> None:
        self.records.append(TraceRecord("X", self._next_seq()))

    def build(self, expectations: dict | None = None) -> Trace:
        return Trace(records=self.records, inits=self.inits,
                     expectations=expectations or {})


@dataclass
class _StablePc:
    pc: int
    srcs: tuple
    paddr: int
    size: int
    mode: str


_GAP_RANGES = {"lt50": (4, 44), "d50_250": (58, 242), "gt250": (258, 700)}


def _mode_srcs(mode: str, idx: int) -> tuple:
    if mode == PC_REL:
        return (RIP,)
    if mode == STACK_REL:
        return ((RSP,), (RBP,), (RSP, RBP))[idx % 3]
    pairs = ((0,), (1,), (2,), (3,), (0, 1), (2, 3))
    return pairs[idx % len(pairs)]


def generate(config: GenConfig) -> Trace:
    """Random workload honoring the configured stable/mode/distance targets."""
    config.validate()
    rng = random.Random(config.seed)
    b = TraceBuilder()
    n = config.n_instructions
    if n == 0:
        return b.build()

    gap_mean = sum(w * (lo + hi) / 2 for (lo, hi), w in
                   zip(_GAP_RANGES.values(),
                       (config.inter_occurrence_profile.get(k, 0)
                        for k in _GAP_RANGES)))
    stable_rate = 0.15 if config.stable_load_fraction > 0 else 0.0
    pool_n = config.stable_pool
    if pool_n is None:
        pool_n = max(4, min(64, round(stable_rate * gap_mean))) if stable_rate else 0

    stable_base = 0x10_0000
    pool: list[_StablePc] = []
    # exact largest-remainder quotas keep the realized mode mix on target
    mode_slots: list[str] = []
    if pool_n:
        shares = [(m, w * pool_n) for m, w in config.addressing_mode_mix.items()]
        counts = {m: int(s) for m, s in shares}
        rest = sorted(shares, key=lambda x: x[1] - int(x[1]), reverse=True)
        for m, _ in rest:
            if sum(counts.values()) == pool_n:
                break
            counts[m] += 1
        for m, k in counts.items():
            mode_slots += [m] * k
        rng.shuffle(mode_slots)
    for i in range(pool_n):
        mode = mode_slots[i]
        paddr = stable_base + i * LINE_BYTES * config.stable_line_stride \
            + rng.randrange(0, 56)
        p = _StablePc(pc=0x40_0000 + 7 * i, srcs=_mode_srcs(mode, i),
                      paddr=paddr, size=8, mode=mode)
        b.init_qword(paddr & ~7, rng.getrandbits(64))
        pool.append(p)

    ns_base = 0x80_0000
    ns_pcs = []
    for i in range(config.ns_pool):
        addrs = [ns_base + (i * 8 + k) * LINE_BYTES for k in range(4)]
        for a in addrs:
            b.init_qword(a, rng.getrandbits(64))
        ns_pcs.append({"pc": 0x50_0000 + 7 * i, "addrs": addrs, "next": 0})

    bins = list(config.inter_occurrence_profile.items())

    def sample_gap() -> int:
        r = rng.random()
        acc = 0.0
        for name, w in bins:
            acc += w
            if r < acc:
                lo, hi = _GAP_RANGES[name]
                return rng.randrange(lo, hi)
        lo, hi = _GAP_RANGES[bins[-1][0]]
        return rng.randrange(lo, hi)

    due: list[tuple[int, int]] = []  # (instruction index, pool index)
    for i in range(pool_n):
        heapq.heappush(due, (rng.randrange(1, max(2, int(gap_mean))), i))

    scratch_base = 0xC0_0000
    f = config.stable_load_fraction
    stable_emitted = 0
    ns_emitted = 0
    trained: list[int] = []  # pool indices with enough instances to be armed
    counts = [0] * pool_n

    def emit_stable(i: int) -> None:
        nonlocal stable_emitted
        p = pool[i]
        b.load(p.pc, p.srcs, p.paddr, p.size)
        stable_emitted += 1
        counts[i] += 1
        if counts[i] == 40:
            trained.append(i)

    def emit_ns() -> None:
        nonlocal ns_emitted
        if not ns_pcs:
            b.pad(1)
            return
        d = ns_pcs[ns_emitted % len(ns_pcs)]
        addr = d["addrs"][d["next"] % len(d["addrs"])]
        d["next"] += 1
        b.load(d["pc"], (STORE_SRC,), addr, 8, dst=NOISE_DST)
        ns_emitted += 1

    def emit_violation() -> None:
        # A store whose address depends on a long ALU chain, then an
        # instance of an armed stable PC before the store can resolve.
        i = trained[rng.randrange(len(trained))]
        p = pool[i]
        for _ in range(10):
            b.alu(0x60_0000, dst=CHAIN_REGS[1], srcs=(CHAIN_REGS[1],))
        silent = rng.random() < 0.5
        old = b.image.read(p.paddr, p.size)
        value = old if silent else (old ^ 0x5A)
        b.store(0x60_0010, (CHAIN_REGS[1],), p.paddr, p.size, value)
        b.pad(2)
        emit_stable(i)

    while b.instructions < n:
        i_now = b.instructions
        if config.snoop_rate and rng.random() < config.snoop_rate:
            if pool and rng.random() < 0.5:
                target = pool[rng.randrange(pool_n)].paddr & ~(LINE_BYTES - 1)
            else:
                target = 0xE0_0000 + rng.randrange(4096) * LINE_BYTES
            b.snoop(target)
        if config.context_switch_rate and rng.random() < config.context_switch_rate:
            b.context_switch()
        if due and due[0][0] <= i_now:
            _, i = heapq.heappop(due)
            emit_stable(i)
            heapq.heappush(due, (b.instructions + sample_gap(), i))
            continue
        if f < 1.0 and stable_emitted * (1 - f) > (ns_emitted + 1) * f:
            emit_ns()
            continue
        r = rng.random()
        if r < config.store_interference_rate:
            if rng.random() < config.silent_store_rate and pool:
                p = pool[rng.randrange(pool_n)]
                b.store(0x70_0000, (STORE_SRC,), p.paddr, p.size,
                        b.image.read(p.paddr, p.size))
            elif ns_pcs:
                d = ns_pcs[rng.randrange(len(ns_pcs))]
                addr = d["addrs"][rng.randrange(len(d["addrs"]))]
                b.store(0x70_0010, (STORE_SRC,), addr, 8, rng.getrandbits(64))
            else:
                b.pad(1)
        elif r < config.store_interference_rate + config.store_rate:
            b.store(0x70_0020, (STORE_SRC,),
                    scratch_base + rng.randrange(512) * 8, 8,
                    rng.getrandbits(64))
        elif r < (config.store_interference_rate + config.store_rate
                  + config.register_overwrite_rate):
            regs = sorted({reg for p in pool for reg in p.srcs if reg != RIP})
            if regs:
                b.alu(0x60_0020, dst=regs[rng.randrange(len(regs))], srcs=())
            else:
                b.pad(1)
        elif config.ordering_violation_rate and trained \
                and rng.random() < config.ordering_violation_rate * 20:
            emit_violation()
        else:
            b.pad(1)
    return b.build()


# ---------------------------------------------------------------------------
# scenarios


def rename_stall_oracle(records, writes_at: dict[int, int] | None = None,
                        rename_width: int = 6, read_ports: int = 3,
                        write_ports: int = 2) -> tuple[int, int]:
    """Rename-bandwidth automaton: predicted (read, write) stall cycles.

    Valid for traces that never hit a backend resource limit; mirrors the
    rename rules: a load needing a fourth SLD read port cuts the group, and
    flag-reset writes beyond the per-cycle budget stall whole cycles.
    """
    writes_at = writes_at or {}
    read_stalls = 0
    write_stalls = 0
    backlog = 0
    idx = 0
    n = len(records)
    while idx < n:
        if backlog > 0:
            backlog = max(0, backlog - write_ports)
            write_stalls += 1
            continue
        budget = rename_width
        reads = 0
        writes = 0
        while budget > 0 and idx < n:
            rec = records[idx]
            if rec.kind != "I":
                idx += 1
                continue
            if rec.op == LOAD:
                if reads >= read_ports:
                    read_stalls += 1
                    break
                reads += 1
            writes += writes_at.get(idx, 0)
            idx += 1
            budget -= 1
        if writes > write_ports:
            backlog = writes - write_ports
    # backlog left after the last record never stalls anything
    return read_stalls, write_stalls


def _stable_run(b: TraceBuilder, pc: int, srcs: tuple, paddr: int,
                count: int, spacing: int = 60) -> None:
    for _ in range(count):
        b.load(pc, srcs, paddr)
        b.pad(spacing)


def _scenario_pure_stable(b: TraceBuilder, rng) -> dict:
    paddr = 0x10_0000 + rng.randrange(8) * LINE_BYTES
    b.init_qword(paddr, rng.getrandbits(64))
    _stable_run(b, 0x40_0000, (RIP,), paddr, 100)
    # fresh SLD entry: first writeback records the pair, confidence stays 0;
    # writeback k leaves confidence k-1, instance 32 renames likely-stable,
    # its writeback arms the flag, instances 33..100 eliminate.
    return {"eliminations": 68, "flushes": 0, "dynamic_loads": 100,
            "coverage_num": 68, "coverage_den": 100}


def _scenario_store_invalidate(b: TraceBuilder, rng) -> dict:
    paddr = 0x11_0000
    b.init_qword(paddr, rng.getrandbits(64))
    pc = 0x40_0000
    for k in range(1, 51):
        b.load(pc, (RIP,), paddr)
        if k == 40:
            b.pad(10)
            b.store(0x41_0000, (STORE_SRC,), paddr, 8,
                    b.image.read(paddr, 8) ^ 0xFF)
            b.pad(50)
        else:
            b.pad(60)
    # instances 33..40 eliminate; the store clears the flag and changes the
    # value, so instance 41 halves confidence 31 -> 15 and 42..50 retrain
    # without reaching the threshold again.
    return {"eliminations": 8, "flushes": 0}


def _scenario_silent_store(b: TraceBuilder, rng) -> dict:
    paddr = 0x12_0000
    b.init_qword(paddr, rng.getrandbits(64))
    pc = 0x40_0000
    for k in range(1, 51):
        b.load(pc, (RIP,), paddr)
        if k == 40:
            b.pad(10)
            b.store(0x41_0000, (STORE_SRC,), paddr, 8, b.image.read(paddr, 8))
            b.pad(50)
        else:
            b.pad(60)
    # The silent store still clears the flag (invalidation is value-blind),
    # costing exactly instance 41: 33..40 and 42..50 eliminate.
    return {"eliminations": 17, "flushes": 0}


def _scenario_ordering_violation(b: TraceBuilder, rng) -> dict:
    paddr = 0x13_0000
    b.init_qword(paddr, rng.getrandbits(64))
    pc = 0x40_0000
    _stable_run(b, pc, (RIP,), paddr, 32)
    # Store address held up by a serial ALU chain; the eliminated instance 33
    # renames and completes long before the store resolves.
    for _ in range(12):
        b.alu(0x60_0000, dst=CHAIN_REGS[0], srcs=(CHAIN_REGS[0],))
    b.store(0x41_0000, (CHAIN_REGS[0],), paddr, 8,
            b.image.read(paddr, 8) ^ 0xAA)
    b.pad(2)
    b.load(pc, (RIP,), paddr)
    b.pad(40)
    return {"eliminations": 1, "flushes": 0, "constable_flushes": 1,
            "eliminated_squashed": 1, "halved_confidence": 15,
            "violating_seq": b.records[-41].seq_no}


def _scenario_false_sharing(b: TraceBuilder, rng) -> dict:
    line = 0x14_0000
    b.init_qword(line, rng.getrandbits(64))       # bytes 0..7: store target
    b.init_qword(line + 8, rng.getrandbits(64))   # bytes 8..15: load target
    pc = 0x40_0000
    for k in range(1, 51):
        b.load(pc, (RIP,), line + 8)
        if k >= 40:
            # store placed after the load's writeback has re-armed the flag,
            # so under line-indexed monitoring nothing stays armed
            b.pad(60)
            b.store(0x41_0000, (STORE_SRC,), line, 4, k)
            b.pad(30)
        else:
            b.pad(60)
    # Line-indexed monitoring: the byte-0 stores keep clearing the flag from
    # instance 41 on (8 eliminations).  Full-address monitoring ignores the
    # disjoint byte range (18 eliminations).
    return {"elim_line": 8, "elim_full": 18, "flushes": 0}


def _scenario_snoop_storm(b: TraceBuilder, rng) -> dict:
    # Snoops land after each writeback has re-armed the flag; every re-read
    # of the invalidated line is a long memory miss whose writeback cannot
    # re-arm before the trace ends, so instances 41..45 all stay un-eliminated.
    paddr = 0x15_0000
    b.init_qword(paddr, rng.getrandbits(64))
    line = paddr & ~(LINE_BYTES - 1)
    pc = 0x40_0000
    for k in range(1, 46):
        b.load(pc, (RIP,), paddr)
        if k >= 40:
            b.pad(60)
            b.snoop(line)
            b.snoop(0xE0_0000 + k * LINE_BYTES)  # never-touched line: ignored
            b.pad(30)
        else:
            b.pad(60)
    return {"eliminations": 8, "snoops_delivered": 6, "snoops_ignored": 6,
            "flushes": 0}


def _scenario_amt_capacity_thrash(b: TraceBuilder, rng) -> dict:
    # Two stable lines plus a stream of fresh lines, all in one L1 set, so
    # the stable lines are clean-evicted between every pair of occurrences.
    # Fresh lines avoid the stable lines' L2 sets: re-reads stay L2 hits.
    s = 5
    stable_lines = [s + 64 * 1, s + 64 * 2]
    pcs = [0x40_0000, 0x40_0007]
    for ln in stable_lines:
        b.init_qword(ln * LINE_BYTES, rng.getrandbits(64))
    fresh = [s + 64 * t for t in range(3, 4000) if (s + 64 * t) % 2048
             not in ((s + 64) % 2048, (s + 128) % 2048)]
    fi = 0
    for _ in range(100):
        for which in (0, 1):
            b.load(pcs[which], (RIP,), stable_lines[which] * LINE_BYTES)
            b.pad(60)
            for _ in range(14):
                b.load(0x50_0000 + 7 * (fi % 7), (STORE_SRC,),
                       fresh[fi] * LINE_BYTES, 8, dst=NOISE_DST)
                fi += 1
                b.pad(2)
    return {"elim_default": 136, "elim_amt_i": 0}


def _scenario_rmt_overflow(b: TraceBuilder, rng) -> dict:
    # Nine PCs share r0 (capacity 8): every arming writeback displaces the
    # next PC in rotation just before it renames, so the register half never
    # eliminates.  Ten PCs share RSP (capacity 16): no displacement, full
    # elimination.  The r0 slots are long enough (>8 cycles) that each
    # writeback lands before the following PC reaches rename.
    reg_pcs = [(0x40_0000 + 7 * i, (0,), 50) for i in range(9)]
    stk_pcs = [(0x42_0000 + 7 * i, (RSP,), 26) for i in range(10)]
    pcs = reg_pcs + stk_pcs
    addrs = []
    for i in range(19):
        a = 0x16_0000 + i * LINE_BYTES
        b.init_qword(a, rng.getrandbits(64))
        addrs.append(a)
    for _ in range(100):
        for i, (pc, srcs, gap) in enumerate(pcs):
            b.load(pc, srcs, addrs[i])
            b.pad(gap)
    return {"eliminations": 680}


def _scenario_sld_port_pressure(b: TraceBuilder, rng) -> dict:
    # Phase A: blocks with four back-to-back loads exercise the 3-read budget.
    for t in range(10):
        for j in range(4):
            a = 0x17_0000 + (t * 4 + j) * LINE_BYTES
            b.init_qword(a, rng.getrandbits(64))
            b.load(0x50_0000 + 7 * (t * 4 + j), (STORE_SRC,), a, 8,
                   dst=NOISE_DST)
        b.pad(2)
    b.pad(24)
    # Phase B: three armed PCs on r0; each write to r0 forces three flag
    # resets against the 2-write budget, one stall cycle per episode.  Mixed
    # pads keep the backend drained so every re-arming writeback lands well
    # before the next episode's register write renames.
    pcs = [(0x40_0000 + 7 * i) for i in range(3)]
    addrs = []
    for i in range(3):
        a = 0x18_0000 + i * LINE_BYTES
        b.init_qword(a, rng.getrandbits(64))
        addrs.append(a)
    for _ in range(33):
        for i, pc in enumerate(pcs):
            b.load(pc, (0,), addrs[i])
            b.mixed_pad(19)
    writes_at: dict[int, int] = {}
    episodes = 6
    for _ in range(episodes):
        idx = len(b.records)
        b.alu(0x60_0000, dst=0, srcs=())
        writes_at[idx] = 3
        b.mixed_pad(11)
        for i, pc in enumerate(pcs):
            b.load(pc, (0,), addrs[i])
            b.mixed_pad(19)
        b.mixed_pad(48)
    reads, writes = rename_stall_oracle(b.records, writes_at)
    return {"sld_read_stalls": reads, "sld_write_stalls": writes}


def _scenario_context_switch(b: TraceBuilder, rng) -> dict:
    paddr = 0x19_0000
    b.init_qword(paddr, rng.getrandbits(64))
    pc = 0x40_0000
    for k in range(1, 101):
        b.load(pc, (RIP,), paddr)
        b.pad(60)
        if k == 50:
            b.context_switch()
            b.context_switch()  # idempotent double switch
    # 33..50 eliminate (18); the switch clears the flag but keeps confidence,
    # instance 51 re-arms at writeback, 52..100 eliminate (49).
    return {"eliminations": 67, "flushes": 0}


def _scenario_stable_port_bound(b: TraceBuilder, rng) -> dict:
    # Two alternating regimes on a 2-load-port core (see the load_ports
    # expectation), sized so every ideal-mode gap is structural:
    #   chain blocks: a pointer chase whose every other hop is a stable load
    #     fed through a freshly written register.  With values only at
    #     writeback each step costs two load-to-use latencies; any mode that
    #     supplies the stable value at rename halves that.
    #   port blocks: six stable plus six independent loads per slot.  Full
    #     value prediction still fetches everything (load-port bound, 6
    #     port cycles a slot); dropping the data fetch leaves address
    #     generation bound at 4; full elimination leaves 3.
    chain_pcs = []
    for i in range(4):
        a = 0x1A_0000 + i * LINE_BYTES
        b.init_qword(a, 0xC0FFEE + i)
        chain_pcs.append((0x43_0000 + 7 * i, a))
    feeder_val = 0x20_0000
    feeder_addrs = [feeder_val + i * LINE_BYTES for i in range(8)]
    for a in feeder_addrs:
        b.init_qword(a, feeder_val)  # every feeder cell holds the same pointer
    port_pcs = []
    for i in range(24):
        a = 0x1C_0000 + i * LINE_BYTES
        b.init_qword(a, 0xBEEF00 + i)
        port_pcs.append((0x40_0000 + 7 * i, a))
    noise_addrs = [0x1D_0000 + i * LINE_BYTES for i in range(16)]
    for a in noise_addrs:
        b.init_qword(a, rng.getrandbits(64))

    def chain_block(slots):
        for t in range(slots):
            # feeder: unstable address, constant value; consumes the stable
            # value and its own previous value, then re-feeds the stable
            # load's base register
            b.load(0x44_0000, (8, 11), feeder_addrs[t % 8], 8, dst=11)
            pc, a = chain_pcs[t % 4]
            b.load(pc, (11,), a)  # stable load, dst r8
            b.pad(4)

    def port_block(slots, start):
        for t in range(slots):
            for j in range(6):
                pc, a = port_pcs[(start + t * 6 + j) % 24]
                b.load(pc, (RIP,), a)
            for j in range(6):
                b.load(0x52_0000 + 7 * (j % 5), (STORE_SRC,),
                       noise_addrs[(t * 6 + j) % 16], 8, dst=NOISE_DST)

    chain_block(150)
    port_block(300, 0)
    chain_block(150)
    port_block(300, 12)
    return {"load_ports": 2}


_SCENARIO_BUILDERS = {
    "pure_stable": _scenario_pure_stable,
    "store_invalidate": _scenario_store_invalidate,
    "silent_store": _scenario_silent_store,
    "ordering_violation": _scenario_ordering_violation,
    "amt_capacity_thrash": _scenario_amt_capacity_thrash,
    "rmt_overflow": _scenario_rmt_overflow,
    "false_sharing": _scenario_false_sharing,
    "snoop_storm": _scenario_snoop_storm,
    "sld_port_pressure": _scenario_sld_port_pressure,
    "context_switch": _scenario_context_switch,
    "stable_port_bound": _scenario_stable_port_bound,
}


def generate_scenario(name: str, seed: int = 0) -> Trace:
    """A hand-built hazard trace with its ground truth in #expect lines."""
    builder_fn = _SCENARIO_BUILDERS.get(name)
    if builder_fn is None:
        raise UnknownScenario(f"unknown scenario {name!r}; choose from {SCENARIOS}")
    rng = random.Random(seed)
    b = TraceBuilder()
    expect = builder_fn(b, rng)
    return b.build(expectations=expect)
