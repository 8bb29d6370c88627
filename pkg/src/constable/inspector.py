"""Offline load analysis: global stability, addressing modes, reuse distance.

A static load is globally stable when every dynamic instance in the trace
fetched the same value from the same physical address.  Inter-occurrence
distance is the count of dynamic instructions between successive instances of
one PC (adjacent instructions have distance 1), binned into [1,50), [50,250],
and (250,inf); one histogram increment per re-occurrence.
"""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import dataclass, field

from .trace import LOAD, RIP, RSP, RBP, IoFailure, Trace

PC_REL = "pc_rel"
STACK_REL = "stack_rel"
REG_REL = "reg_rel"
MODES = (PC_REL, STACK_REL, REG_REL)

BIN_LT50 = "lt50"
BIN_50_250 = "d50_250"
BIN_GT250 = "gt250"
BINS = (BIN_LT50, BIN_50_250, BIN_GT250)

CSV_COLUMNS = ("pc", "dyn_count", "stable", "mode",
               "dist_lt50", "dist_50_250", "dist_gt250", "dist_median")


class EmptySourceSet(Exception):
    pass


def addressing_mode(src_regs) -> str:
    """Classify a load by its source register set.

    {RIP} alone is PC-relative; a nonempty subset of {RSP, RBP} is
    stack-relative; anything else (including RSP plus another GPR) is
    register-relative.
    """
    srcs = frozenset(src_regs)
    if not srcs:
        raise EmptySourceSet("load with no source registers")
    if srcs == {RIP}:
        return PC_REL
    if srcs <= {RSP, RBP}:
        return STACK_REL
    return REG_REL


def distance_bin(distance: int) -> str:
    if distance < 50:
        return BIN_LT50
    if distance <= 250:
        return BIN_50_250
    return BIN_GT250


@dataclass
class StaticLoadProfile:
    pc: int
    dynamic_count: int = 0
    is_global_stable: bool = True
    addressing_mode: str = REG_REL
    stable_paddr: int = 0
    stable_value: int = 0
    distance_histogram: dict = field(
        default_factory=lambda: {b: 0 for b in BINS})
    distances: list = field(default_factory=list)

    @property
    def median_distance(self) -> float:
        return statistics.median(self.distances) if self.distances else 0.0


@dataclass
class Aggregates:
    total_dynamic_loads: int = 0
    global_stable_dynamic_fraction: float = 0.0
    mode_breakdown: dict = field(
        default_factory=lambda: {m: 0.0 for m in MODES})
    distance_breakdown: dict = field(
        default_factory=lambda: {b: 0.0 for b in BINS})
    per_mode_distance_breakdown: dict = field(
        default_factory=lambda: {m: {b: 0.0 for b in BINS} for m in MODES})


def analyze(trace: Trace) -> tuple[dict[int, StaticLoadProfile], Aggregates]:
    """Single streaming pass over a sane trace; aggregates are exact."""
    profiles: dict[int, StaticLoadProfile] = {}
    last_seen: dict[int, int] = {}
    instr_ordinal = 0
    for rec in trace.records:
        if rec.kind != "I":
            continue
        instr_ordinal += 1
        if rec.op != LOAD:
            continue
        p = profiles.get(rec.pc)
        if p is None:
            p = StaticLoadProfile(
                pc=rec.pc,
                addressing_mode=addressing_mode(rec.srcs),
                stable_paddr=rec.paddr,
                stable_value=rec.value,
            )
            profiles[rec.pc] = p
        else:
            if (rec.paddr, rec.value) != (p.stable_paddr, p.stable_value):
                p.is_global_stable = False
            d = instr_ordinal - last_seen[rec.pc]
            p.distance_histogram[distance_bin(d)] += 1
            p.distances.append(d)
        p.dynamic_count += 1
        last_seen[rec.pc] = instr_ordinal

    agg = Aggregates()
    stable_dyn = 0
    mode_dyn = {m: 0 for m in MODES}
    bin_counts = {b: 0 for b in BINS}
    mode_bins = {m: {b: 0 for b in BINS} for m in MODES}
    for p in profiles.values():
        agg.total_dynamic_loads += p.dynamic_count
        if not p.is_global_stable:
            continue
        stable_dyn += p.dynamic_count
        mode_dyn[p.addressing_mode] += p.dynamic_count
        for b in BINS:
            bin_counts[b] += p.distance_histogram[b]
            mode_bins[p.addressing_mode][b] += p.distance_histogram[b]
    if agg.total_dynamic_loads:
        agg.global_stable_dynamic_fraction = stable_dyn / agg.total_dynamic_loads
    if stable_dyn:
        agg.mode_breakdown = {m: mode_dyn[m] / stable_dyn for m in MODES}
    total_gaps = sum(bin_counts.values())
    if total_gaps:
        agg.distance_breakdown = {b: bin_counts[b] / total_gaps for b in BINS}
    for m in MODES:
        gaps = sum(mode_bins[m].values())
        if gaps:
            agg.per_mode_distance_breakdown[m] = {
                b: mode_bins[m][b] / gaps for b in BINS}
    return profiles, agg


def _profile_row(p: StaticLoadProfile) -> list:
    return [f"{p.pc:x}", p.dynamic_count, int(p.is_global_stable),
            p.addressing_mode,
            p.distance_histogram[BIN_LT50],
            p.distance_histogram[BIN_50_250],
            p.distance_histogram[BIN_GT250],
            p.median_distance]


def export_report(profiles: dict[int, StaticLoadProfile], aggregates: Aggregates,
                  fmt: str, path: str) -> None:
    """Write the analysis as CSV (documented column order) or JSON."""
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown report format {fmt!r}")
    ordered = [profiles[pc] for pc in sorted(profiles)]
    try:
        if fmt == "csv":
            with open(path, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh)
                w.writerow(CSV_COLUMNS)
                for p in ordered:
                    w.writerow(_profile_row(p))
        else:
            doc = {
                "aggregates": {
                    "total_dynamic_loads": aggregates.total_dynamic_loads,
                    "global_stable_dynamic_fraction":
                        aggregates.global_stable_dynamic_fraction,
                    "mode_breakdown": aggregates.mode_breakdown,
                    "distance_breakdown": aggregates.distance_breakdown,
                    "per_mode_distance_breakdown":
                        aggregates.per_mode_distance_breakdown,
                },
                "profiles": [dict(zip(CSV_COLUMNS, _profile_row(p)))
                             for p in ordered],
            }
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(doc, fh, indent=2, sort_keys=True)
                fh.write("\n")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
