"""Cycle-level out-of-order core: rename, allocate, issue, execute, retire.

The trace cursor feeds rename directly (no front end).  Loads issue out of
order but never past an older store whose address is still unknown; only
loads completed at rename (eliminated ones) can therefore be caught by the
memory-disambiguation scan when a store address finally resolves, which
squashes and re-fetches everything from the violating load onward.

Intra-cycle order: retire, rename (engine lookups then per-uop destination
register writes, with snoops and context switches applied at the trace
cursor), issue, store-address resolutions, writebacks.
"""

from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass, field
from heapq import heappush, heappop

from .trace import (LOAD, STORE, LINE_SHIFT, ByteImage, Trace,
                    replay_functional)
from .engine import (NORMAL, MARK_LIKELY_STABLE, ELIMINATE, VALUE_AT_RENAME,
                     VALUE_AT_RENAME_NO_FETCH, BaselineEngine)
from .memsys import MemorySystem


class GoldenCheckMismatch(Exception):
    def __init__(self, seq_no: int, expected: tuple, got: tuple):
        super().__init__(f"seq {seq_no}: expected addr/value {expected}, got {got}")
        self.seq_no = seq_no
        self.expected = expected
        self.got = got


class StructuralDeadlock(Exception):
    pass


@dataclass
class CoreConfig:
    rename_width: int = 6
    retire_width: int = 6
    rob_size: int = 512
    lb_size: int = 240
    sb_size: int = 112
    rs_size: int = 248
    alu_ports: int = 5
    agu_ports: int = 3
    load_ports: int = 3
    sta_ports: int = 2
    std_ports: int = 2
    store_address_delay: int = 0
    load_width_multiplier: int = 1
    flush_penalty: int = 5
    alu_latency: int = 1
    deadlock_guard_cycles: int = 20000

    def __post_init__(self):
        for name in ("rename_width", "retire_width", "rob_size", "lb_size",
                     "sb_size", "rs_size", "alu_ports", "agu_ports",
                     "load_ports", "sta_ports", "std_ports"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


# uop lifecycle
ALLOCATED, ISSUED, COMPLETED, SQUASHED = 0, 1, 2, 3


class Uop:
    __slots__ = ("rec", "rec_idx", "age", "alloc_cycle", "stage", "deps",
                 "consumers", "value_ready", "complete_cycle", "paddr", "value",
                 "eliminated", "oracle_exempt", "dfe", "likely_stable", "in_rs",
                 "lb_line", "resolved")

    def __init__(self, rec, rec_idx: int, age: int, cycle: int):
        self.rec = rec
        self.rec_idx = rec_idx
        self.age = age
        self.alloc_cycle = cycle
        self.stage = ALLOCATED
        self.deps = 0
        self.consumers: list[Uop] = []
        self.value_ready: int | None = None
        self.complete_cycle: int | None = None
        self.paddr = 0
        self.value = 0
        self.eliminated = False
        self.oracle_exempt = False
        self.dfe = False
        self.likely_stable = False
        self.in_rs = False
        self.lb_line: int | None = None
        self.resolved = False


@dataclass
class SimStats:
    engine: str = "none"
    mode: str = "baseline"
    cycles: int = 0
    retired_instructions: int = 0
    retired_loads: int = 0
    retired_stores: int = 0
    renamed_uops: int = 0
    rs_allocations: int = 0
    l1d_accesses: int = 0
    eliminated_loads: int = 0
    eliminated_retired: int = 0
    eliminated_squashed: int = 0
    ordering_violation_flushes: int = 0
    refetched_uops: int = 0
    xprf_full_rejections: int = 0
    load_utilized_cycles: int = 0
    stable_load_port_cycles: int = 0
    rename_stall_cycles: dict = field(default_factory=lambda: {
        "sld_read": 0, "sld_write": 0, "resource": 0})
    port_busy: dict = field(default_factory=lambda: {
        "alu": 0, "agu": 0, "load": 0, "sta": 0, "std": 0})
    engine_counters: dict = field(default_factory=dict)
    mem: dict = field(default_factory=dict)
    golden_checked: bool = False
    stream_digest: str = ""
    stream: list | None = None

    @property
    def ipc(self) -> float:
        return self.retired_instructions / self.cycles if self.cycles else 0.0

    @property
    def coverage(self) -> float:
        return self.eliminated_retired / self.retired_loads if self.retired_loads else 0.0

    def to_dict(self) -> dict:
        out = {
            "engine": self.engine,
            "mode": self.mode,
            "cycles": self.cycles,
            "ipc": self.ipc,
            "retired_instructions": self.retired_instructions,
            "retired_loads": self.retired_loads,
            "retired_stores": self.retired_stores,
            "renamed_uops": self.renamed_uops,
            "rs_allocations": self.rs_allocations,
            "l1d_accesses": self.l1d_accesses,
            "eliminated_loads": self.eliminated_loads,
            "eliminated_retired": self.eliminated_retired,
            "eliminated_squashed": self.eliminated_squashed,
            "coverage": self.coverage,
            "ordering_violation_flushes": self.ordering_violation_flushes,
            "refetched_uops": self.refetched_uops,
            "xprf_full_rejections": self.xprf_full_rejections,
            "load_utilized_cycles": self.load_utilized_cycles,
            "stable_load_port_cycles": self.stable_load_port_cycles,
            "only_nonstable_port_cycles":
                self.load_utilized_cycles - self.stable_load_port_cycles,
            "rename_stall_cycles": dict(self.rename_stall_cycles),
            "port_busy": dict(self.port_busy),
            "engine_counters": self.engine_counters,
            "mem": dict(self.mem),
            "golden_checked": self.golden_checked,
            "stream_digest": self.stream_digest,
        }
        return out


def _slice_store_value(store_paddr, store_size, store_value, paddr, size) -> int:
    off = paddr - store_paddr
    return (store_value >> (8 * off)) & ((1 << (8 * size)) - 1)


class Simulator:
    """One deterministic core simulation over one trace."""

    def __init__(self, trace: Trace, core: CoreConfig | None = None,
                 engine=None, memsys: MemorySystem | None = None,
                 golden_check: bool = False, stable_pcs=None,
                 collect_stream: bool = False):
        self.trace = trace
        self.core = core or CoreConfig()
        self.engine = engine if engine is not None else BaselineEngine()
        self.memsys = memsys if memsys is not None else MemorySystem()
        if getattr(self.memsys, "engine", None) is None:
            self.memsys.attach_engine(self.engine)
        self.golden = golden_check
        self.stable_pcs = stable_pcs or frozenset()
        self.collect_stream = collect_stream

        self.records = trace.records
        self.functional = replay_functional(self.records, trace.inits) if golden_check else None
        # committed memory: header init state, advanced by retiring stores
        self.image = ByteImage()
        for paddr, data in trace.inits:
            self.image.write_bytes(paddr, data)

        self.stats = SimStats(golden_checked=golden_check)
        self.stats.stream = [] if collect_stream else None

        self.rob: deque[Uop] = deque()
        self.sb: deque[Uop] = deque()
        self.lb_used = 0
        self.sb_used = 0
        self.rs_used = 0
        self.cursor = 0
        self.directive_hwm = -1
        self.next_age = 0
        self.last_writer: dict[int, Uop] = {}

        self.ready_alu: list = []
        self.ready_store: list = []
        self.ready_load: list = []
        self.ready_dfe: list = []
        self.pending_ready: list[Uop] = []
        self.gate_blocked: list = []
        self.blocked_on_store: dict[Uop, list[Uop]] = {}
        self.unresolved_stores: list = []
        self.lb_lines: dict[int, list[Uop]] = {}

        self.completions: dict[int, list[Uop]] = {}
        self.resolves: dict[int, list[Uop]] = {}
        self.port_resv: dict[int, int] = {}       # load-port reservations per cycle
        self.stable_marked: set[int] = set()

        self.rename_blocked_until = 0
        self.sld_write_backlog = 0
        self._digest = hashlib.sha256()

        m = self.core.load_width_multiplier
        self.agu_ports_eff = self.core.agu_ports * m
        self.load_ports_eff = self.core.load_ports * m
        self.read_ports = getattr(self.engine, "sld_read_ports", 0)
        self.write_ports = getattr(self.engine, "sld_write_ports", 1) or 1

    # -- dataflow wiring ----------------------------------------------------

    def _wire_sources(self, uop: Uop) -> None:
        for r in uop.rec.srcs:
            p = self.last_writer.get(r)
            if p is not None and p.value_ready is None:
                uop.deps += 1
                p.consumers.append(uop)

    def _set_value_ready(self, uop: Uop, cycle: int) -> None:
        uop.value_ready = cycle
        for c in uop.consumers:
            c.deps -= 1
            if c.deps == 0 and c.stage == ALLOCATED:
                self.pending_ready.append(c)
        uop.consumers = []

    def _enqueue_ready(self, uop: Uop) -> None:
        op = uop.rec.op
        if op == LOAD:
            heappush(self.ready_dfe if uop.dfe else self.ready_load,
                     (uop.age, uop))
        elif op == STORE:
            heappush(self.ready_store, (uop.age, uop))
        else:
            heappush(self.ready_alu, (uop.age, uop))

    def _gate(self) -> int:
        h = self.unresolved_stores
        while h and (h[0][1].stage == SQUASHED or h[0][1].resolved):
            heappop(h)
        return h[0][0] if h else 1 << 62

    def _release_gate_blocked(self) -> None:
        gate = self._gate()
        h = self.gate_blocked
        while h and h[0][0] < gate:
            _, uop = heappop(h)
            if uop.stage == ALLOCATED:
                heappush(self.ready_load, (uop.age, uop))

    # -- rename -------------------------------------------------------------

    def _process_directive(self, rec, idx: int, cycle: int) -> None:
        if idx <= self.directive_hwm:
            return  # already applied; flush replay must not double-deliver
        self.directive_hwm = idx
        if rec.kind == "N":
            self.memsys.deliver_snoop(rec.snoop_paddr >> LINE_SHIFT, cycle)
        else:  # "X": physical mapping change
            self.engine.on_context_switch()
            self.memsys.clear_pins()

    def _rename(self, cycle: int) -> int:
        core = self.core
        st = self.stats
        if self.cursor >= len(self.records):
            return 0
        if cycle < self.rename_blocked_until:
            return 0
        if self.sld_write_backlog > 0:
            # Pending flag resets from the previous group hog the write ports.
            self.sld_write_backlog = max(0, self.sld_write_backlog - self.write_ports)
            st.rename_stall_cycles["sld_write"] += 1
            return 0
        renamed = 0
        reads_used = 0
        writes_needed = 0
        budget = core.rename_width
        records = self.records
        n = len(records)
        engine = self.engine
        has_sld = engine.has_sld
        while budget > 0 and self.cursor < n:
            rec = records[self.cursor]
            if rec.kind != "I":
                self._process_directive(rec, self.cursor, cycle)
                self.cursor += 1
                renamed += 1  # directives count as cursor progress, not uops
                continue
            op = rec.op
            is_load = op == LOAD
            if len(self.rob) >= core.rob_size or self.rs_used >= core.rs_size \
                    or (is_load and self.lb_used >= core.lb_size) \
                    or (op == STORE and self.sb_used >= core.sb_size):
                st.rename_stall_cycles["resource"] += 1
                break
            if is_load and has_sld and reads_used >= self.read_ports:
                st.rename_stall_cycles["sld_read"] += 1
                break
            decision, d_value, d_addr = NORMAL, 0, 0
            if is_load:
                if has_sld:
                    reads_used += 1
                decision, d_value, d_addr = engine.lookup_at_rename(rec)

            uop = Uop(rec, self.cursor, self.next_age, cycle)
            self.next_age += 1
            self.rob.append(uop)
            st.renamed_uops += 1

            if is_load:
                self.lb_used += 1
            if decision == ELIMINATE:
                uop.eliminated = True
                uop.stage = COMPLETED
                uop.paddr = d_addr
                uop.value = d_value
                uop.complete_cycle = cycle
                uop.value_ready = cycle
                uop.oracle_exempt = not has_sld  # oracle values are ground truth
                if not uop.oracle_exempt:
                    uop.lb_line = d_addr >> LINE_SHIFT
                    self.lb_lines.setdefault(uop.lb_line, []).append(uop)
                st.eliminated_loads += 1
            else:
                uop.in_rs = True
                self.rs_used += 1
                st.rs_allocations += 1
                if decision == MARK_LIKELY_STABLE:
                    uop.likely_stable = True
                elif decision in (VALUE_AT_RENAME, VALUE_AT_RENAME_NO_FETCH):
                    uop.oracle_exempt = True
                    uop.value_ready = cycle  # dependents wake now; uop still executes
                    uop.paddr = rec.paddr
                    uop.value = rec.value
                    uop.dfe = decision == VALUE_AT_RENAME_NO_FETCH
                self._wire_sources(uop)
                if op == STORE:
                    self.sb.append(uop)
                    self.sb_used += 1
                    heappush(self.unresolved_stores, (uop.age, uop))
                if uop.deps == 0:
                    self.pending_ready.append(uop)
            if rec.dst is not None:
                self.last_writer[rec.dst] = uop
                writes_needed += engine.on_dest_register_write(rec.dst)
            self.cursor += 1
            budget -= 1
            renamed += 1
        if writes_needed > self.write_ports:
            self.sld_write_backlog = writes_needed - self.write_ports
        return renamed

    # -- issue ---------------------------------------------------------------

    def _pop_alive(self, heap) -> Uop | None:
        while heap:
            _, uop = heappop(heap)
            if uop.stage == ALLOCATED:
                return uop
        return None

    def _peek_alive(self, heap) -> Uop | None:
        while heap:
            if heap[0][1].stage == ALLOCATED:
                return heap[0][1]
            heappop(heap)
        return None

    def _issue(self, cycle: int) -> int:
        core = self.core
        st = self.stats
        issued = 0

        avail = core.alu_ports
        while avail > 0:
            uop = self._pop_alive(self.ready_alu)
            if uop is None:
                break
            uop.stage = ISSUED
            uop.in_rs = False
            self.rs_used -= 1
            done = cycle + core.alu_latency - 1
            uop.complete_cycle = done
            self.completions.setdefault(done, []).append(uop)
            st.port_busy["alu"] += 1
            avail -= 1
            issued += 1

        sta = core.sta_ports
        std = core.std_ports
        delay = core.store_address_delay
        deferred = []
        while sta > 0 and std > 0:
            uop = self._pop_alive(self.ready_store)
            if uop is None:
                break
            if cycle < uop.alloc_cycle + delay:
                deferred.append(uop)
                continue
            uop.stage = ISSUED
            uop.in_rs = False
            self.rs_used -= 1
            self.resolves.setdefault(cycle + 1, []).append(uop)
            self.completions.setdefault(cycle + 1, []).append(uop)
            st.port_busy["sta"] += 1
            st.port_busy["std"] += 1
            sta -= 1
            std -= 1
            issued += 1
        for uop in deferred:
            heappush(self.ready_store, (uop.age, uop))

        agu = self.agu_ports_eff
        lp_cycle = cycle + 1
        lp_used = self.port_resv.get(lp_cycle, 0)
        lp_max = self.load_ports_eff
        loads_lp_blocked = False
        gate = self._gate()
        carry = []
        while agu > 0:
            head_load = None if loads_lp_blocked else self._peek_alive(self.ready_load)
            head_dfe = self._peek_alive(self.ready_dfe)
            if head_load is None and head_dfe is None:
                break
            use_dfe = head_load is None or (head_dfe is not None
                                            and head_dfe.age < head_load.age)
            if use_dfe:
                uop = self._pop_alive(self.ready_dfe)
                uop.stage = ISSUED
                uop.in_rs = False
                self.rs_used -= 1
                done = cycle  # address generation only, one cycle
                uop.complete_cycle = done
                self.completions.setdefault(done, []).append(uop)
                st.port_busy["agu"] += 1
                agu -= 1
                issued += 1
                continue
            uop = self._pop_alive(self.ready_load)
            if uop is None:
                loads_lp_blocked = True
                continue
            if gate <= uop.age:
                heappush(self.gate_blocked, (uop.age, uop))
                continue
            blocked, fwd = self._check_store_buffer(uop)
            if blocked is not None:
                self.blocked_on_store.setdefault(blocked, []).append(uop)
                continue
            if lp_used >= lp_max:
                carry.append(uop)
                loads_lp_blocked = True
                continue
            rec = uop.rec
            uop.paddr = rec.paddr
            if fwd is not None:
                uop.value = _slice_store_value(fwd.paddr, fwd.rec.size, fwd.value,
                                               rec.paddr, rec.size)
                latency = self.memsys.cfg.l1_latency
            else:
                uop.value = self.image.read(rec.paddr, rec.size)
                latency, _level = self.memsys.access_load(rec.paddr, cycle)
            st.l1d_accesses += 1
            uop.stage = ISSUED
            uop.in_rs = False
            self.rs_used -= 1
            uop.lb_line = rec.paddr >> LINE_SHIFT
            self.lb_lines.setdefault(uop.lb_line, []).append(uop)
            done = cycle + latency
            uop.complete_cycle = done
            self.completions.setdefault(done, []).append(uop)
            lp_used += 1
            self.port_resv[lp_cycle] = lp_used
            if lp_used == 1:
                st.load_utilized_cycles += 1
            if self.stable_pcs and rec.pc in self.stable_pcs \
                    and lp_cycle not in self.stable_marked:
                self.stable_marked.add(lp_cycle)
                st.stable_load_port_cycles += 1
            st.port_busy["agu"] += 1
            st.port_busy["load"] += 1
            agu -= 1
            issued += 1
        for uop in carry:
            if uop.stage == ALLOCATED:
                heappush(self.ready_load, (uop.age, uop))
        return issued

    def _check_store_buffer(self, uop: Uop):
        """Find the youngest older resolved store overlapping this load.

        Returns (blocking_store, forward_store): full containment forwards,
        partial overlap blocks until the store retires.
        """
        rec = uop.rec
        lo = rec.paddr
        hi = lo + rec.size
        for store in reversed(self.sb):
            if store.age >= uop.age:
                continue
            if not store.resolved:
                continue  # unresolved stores are handled by the issue gate
            s_lo = store.paddr
            s_hi = s_lo + store.rec.size
            if hi <= s_lo or s_hi <= lo:
                continue
            if s_lo <= lo and hi <= s_hi:
                return None, store
            return store, None
        return None, None

    # -- store resolution and disambiguation ---------------------------------

    def _resolve_stores(self, cycle: int) -> int:
        n = 0
        for uop in self.resolves.pop(cycle, ()):
            if uop.stage == SQUASHED:
                continue
            rec = uop.rec
            uop.resolved = True
            uop.paddr = rec.paddr
            uop.value = rec.value
            self.engine.on_store_resolved(rec.paddr, rec.size)
            self._release_gate_blocked()
            self._scan_for_violation(uop, cycle)
            n += 1
        return n

    def _scan_for_violation(self, store: Uop, cycle: int) -> None:
        line = store.rec.paddr >> LINE_SHIFT
        cands = self.lb_lines.get(line)
        if not cands:
            return
        violator = None
        for u in cands:
            if u.age > store.age and u.stage == COMPLETED and not u.oracle_exempt:
                if violator is None or u.age < violator.age:
                    violator = u
        if violator is not None:
            self._flush(violator, cycle)

    def _flush(self, violator: Uop, cycle: int) -> None:
        st = self.stats
        st.ordering_violation_flushes += 1
        rob = self.rob
        cutoff = violator.age
        while rob and rob[-1].age >= cutoff:
            uop = rob.pop()
            uop.stage = SQUASHED
            st.refetched_uops += 1
            rec = uop.rec
            if rec.op == LOAD:
                self.lb_used -= 1
                if uop.lb_line is not None:
                    lst = self.lb_lines.get(uop.lb_line)
                    if lst is not None:
                        lst.remove(uop)
                        if not lst:
                            del self.lb_lines[uop.lb_line]
                if uop.eliminated:
                    st.eliminated_squashed += 1
                    self.engine.release_xprf()
            elif rec.op == STORE:
                self.sb_used -= 1
                tail = self.sb.pop()
                assert tail is uop
                self.blocked_on_store.pop(uop, None)
            if uop.in_rs:
                uop.in_rs = False
                self.rs_used -= 1
        self.cursor = violator.rec_idx
        self.sld_write_backlog = 0  # the redirect wipes the rename pipeline
        self.rename_blocked_until = max(self.rename_blocked_until,
                                        cycle + 1 + self.core.flush_penalty)
        self.last_writer = {}
        for uop in rob:
            if uop.rec.dst is not None:
                self.last_writer[uop.rec.dst] = uop

    # -- writeback ------------------------------------------------------------

    def _complete(self, cycle: int) -> int:
        n = 0
        engine = self.engine
        for uop in self.completions.pop(cycle, ()):
            if uop.stage != ISSUED:
                continue
            uop.stage = COMPLETED
            rec = uop.rec
            if uop.value_ready is None:
                self._set_value_ready(uop, cycle)
            if rec.op == LOAD and not uop.oracle_exempt:
                engine.on_writeback(rec.pc, uop.paddr, uop.value,
                                    uop.likely_stable, srcs=rec.srcs,
                                    size=rec.size)
            n += 1
        return n

    # -- retire -----------------------------------------------------------------

    def _retire(self, cycle: int) -> int:
        st = self.stats
        rob = self.rob
        width = self.core.retire_width
        retired = 0
        while width > 0 and rob:
            uop = rob[0]
            if uop.stage != COMPLETED:
                break
            rob.popleft()
            rec = uop.rec
            if rec.op == LOAD:
                if self.golden:
                    exp = self.functional.expected[rec.seq_no]
                    if (uop.paddr, uop.value) != exp:
                        raise GoldenCheckMismatch(rec.seq_no, exp,
                                                  (uop.paddr, uop.value))
                self._digest.update(
                    b"%d:%x:%x;" % (rec.seq_no, uop.paddr, uop.value))
                if st.stream is not None:
                    st.stream.append((rec.seq_no, uop.paddr, uop.value))
                st.retired_loads += 1
                self.lb_used -= 1
                if uop.lb_line is not None:
                    lst = self.lb_lines.get(uop.lb_line)
                    if lst is not None:
                        lst.remove(uop)
                        if not lst:
                            del self.lb_lines[uop.lb_line]
                if uop.eliminated:
                    st.eliminated_retired += 1
                    self.engine.release_xprf()
            elif rec.op == STORE:
                self.image.write(rec.paddr, rec.size, rec.value)
                head = self.sb.popleft()
                assert head is uop
                self.sb_used -= 1
                st.retired_stores += 1
                for blocked in self.blocked_on_store.pop(uop, ()):
                    if blocked.stage == ALLOCATED:
                        heappush(self.ready_load, (blocked.age, blocked))
            st.retired_instructions += 1
            width -= 1
            retired += 1
        return retired

    # -- main loop -----------------------------------------------------------

    def run(self) -> SimStats:
        st = self.stats
        st.engine = getattr(self.engine, "name", type(self.engine).__name__)
        cycle = 0
        last_progress = 0
        guard = self.core.deadlock_guard_cycles
        n_records = len(self.records)
        while self.rob or self.cursor < n_records:
            progress = self._retire(cycle)
            progress += self._rename(cycle)
            progress += self._issue(cycle)
            progress += self._resolve_stores(cycle)
            progress += self._complete(cycle)
            if self.pending_ready:
                for uop in self.pending_ready:
                    if uop.stage == ALLOCATED:
                        self._enqueue_ready(uop)
                self.pending_ready = []
            self.port_resv.pop(cycle, None)
            self.stable_marked.discard(cycle)
            if progress:
                last_progress = cycle
            elif cycle - last_progress > guard:
                raise StructuralDeadlock(f"no progress since cycle {last_progress}")
            cycle += 1
        st.cycles = cycle
        st.xprf_full_rejections = self.engine.counters.get("xprf_full_rejections", 0) \
            if hasattr(self.engine, "counters") else 0
        st.engine_counters = getattr(self.engine, "counters", {})
        ms = self.memsys
        st.mem = {"l1_hits": ms.l1_hits, "l2_hits": ms.l2_hits,
                  "mem_fills": ms.mem_fills,
                  "snoops_delivered": ms.snoops_delivered,
                  "snoops_ignored": ms.snoops_ignored}
        st.stream_digest = self._digest.hexdigest()
        return st


def run(trace: Trace, core: CoreConfig | None = None, engine=None,
        memsys: MemorySystem | None = None, golden_check: bool = False,
        stable_pcs=None, collect_stream: bool = False) -> SimStats:
    """Simulate one trace and return its statistics."""
    sim = Simulator(trace, core=core, engine=engine, memsys=memsys,
                    golden_check=golden_check, stable_pcs=stable_pcs,
                    collect_stream=collect_stream)
    return sim.run()
