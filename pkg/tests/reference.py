"""Independent reference implementations used as test oracles.

These deliberately share no code with the package: flat byte-map replay,
list-based LRU, a dict-of-lists two-pass load inspector, and a re-derived
rename-bandwidth automaton.
"""

from __future__ import annotations

from collections import defaultdict


def replay_bytes(records, inits):
    """Byte-at-a-time functional replay; returns {seq_no: (paddr, value)}."""
    mem: dict[int, int] = {}
    for base, data in inits:
        for i, byte in enumerate(data):
            mem[base + i] = byte
    expected = {}
    for rec in records:
        if rec.kind != "I":
            continue
        if rec.op == "L":
            val = 0
            for i in range(rec.size):
                val |= mem.get(rec.paddr + i, 0) << (8 * i)
            expected[rec.seq_no] = (rec.paddr, val)
        elif rec.op == "S":
            for i in range(rec.size):
                mem[rec.paddr + i] = (rec.value >> (8 * i)) & 0xFF
    return expected


class LruSetReference:
    """One set of an LRU cache as an ordered list, most recent last."""

    def __init__(self, ways):
        self.ways = ways
        self.lines = []

    def access(self, line):
        hit = line in self.lines
        if hit:
            self.lines.remove(line)
        self.lines.append(line)
        evicted = None
        if len(self.lines) > self.ways:
            evicted = self.lines.pop(0)
        return hit, evicted


class LruCacheReference:
    def __init__(self, total_bytes, ways, line_bytes=64):
        self.n_sets = total_bytes // (ways * line_bytes)
        self.sets = [LruSetReference(ways) for _ in range(self.n_sets)]

    def access(self, line):
        return self.sets[line % self.n_sets].access(line)


def brute_force_inspect(records):
    """Two-pass inspector: full per-PC instance lists, then aggregation.

    Returns {pc: {"count", "stable", "mode", "bins": (lt50, mid, gt250),
    "pairs"}} plus the aggregate dict.
    """
    instances = defaultdict(list)  # pc -> [(ordinal, paddr, value, srcs)]
    ordinal = 0
    for rec in records:
        if rec.kind != "I":
            continue
        ordinal += 1
        if rec.op == "L":
            instances[rec.pc].append((ordinal, rec.paddr, rec.value, rec.srcs))
    out = {}
    total_dyn = 0
    stable_dyn = 0
    mode_dyn = defaultdict(int)
    bins_total = [0, 0, 0]
    mode_bins = defaultdict(lambda: [0, 0, 0])
    for pc, inst in instances.items():
        pairs = {(p, v) for _, p, v, _ in inst}
        stable = len(pairs) == 1
        srcs = set(inst[0][3])
        if srcs == {16}:
            mode = "pc_rel"
        elif srcs and srcs <= {4, 5}:
            mode = "stack_rel"
        else:
            mode = "reg_rel"
        bins = [0, 0, 0]
        dists = []
        for (o1, *_), (o2, *_) in zip(inst, inst[1:]):
            d = o2 - o1
            dists.append(d)
            if d < 50:
                bins[0] += 1
            elif d <= 250:
                bins[1] += 1
            else:
                bins[2] += 1
        out[pc] = {"count": len(inst), "stable": stable, "mode": mode,
                   "bins": tuple(bins), "dists": dists}
        total_dyn += len(inst)
        if stable:
            stable_dyn += len(inst)
            mode_dyn[mode] += len(inst)
            for i in range(3):
                bins_total[i] += bins[i]
                mode_bins[mode][i] += bins[i]
    agg = {
        "total": total_dyn,
        "stable_fraction": stable_dyn / total_dyn if total_dyn else 0.0,
        "mode": {m: (mode_dyn[m] / stable_dyn if stable_dyn else 0.0)
                 for m in ("pc_rel", "stack_rel", "reg_rel")},
        "bins": tuple(b / sum(bins_total) if sum(bins_total) else 0.0
                      for b in bins_total),
        "mode_bins": {m: tuple(b / sum(mode_bins[m]) if sum(mode_bins[m]) else 0.0
                               for b in mode_bins[m])
                      for m in ("pc_rel", "stack_rel", "reg_rel")},
    }
    return out, agg


def rename_stalls_reference(records, writes_at=None, width=6, read_ports=3,
                            write_ports=2):
    """Re-derived rename automaton: (read_stalls, write_stalls).

    A rename group ends when six records are consumed or a load cannot get
    an SLD read port (counted as one read stall).  Flag-reset writes beyond
    the per-cycle write budget carry over and stall whole rename cycles.
    """
    writes_at = writes_at or {}
    idx, n = 0, len(records)
    read_stalls = write_stalls = carry = 0
    while idx < n:
        if carry > 0:
            carry = max(0, carry - write_ports)
            write_stalls += 1
            continue
        slots = width
        reads = writes = 0
        while slots and idx < n:
            rec = records[idx]
            if rec.kind != "I":
                idx += 1
                continue
            if rec.op == "L":
                if reads == read_ports:
                    read_stalls += 1
                    break
                reads += 1
            writes += writes_at.get(idx, 0)
            idx += 1
            slots -= 1
        carry = max(0, writes - write_ports)
    return read_stalls, write_stalls
