"""Post-processing: structure energy accounting, cycle classification, and
run-to-run deltas.

Dynamic energy is linear in the table access counters; leakage converts the
cycle count to seconds at the core clock and is reported separately from the
headline dynamic numbers.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

from .trace import IoFailure


@dataclass
class StructureEnergy:
    read_pj: float
    write_pj: float
    leakage_mw: float
    area_mm2: float

    def __post_init__(self):
        if min(self.read_pj, self.write_pj, self.leakage_mw, self.area_mm2) <= 0:
            raise ValueError("energy model values must be positive")


@dataclass
class EnergyModel:
    """Per-access energy, leakage power, and area of the engine tables (14nm)."""

    sld: StructureEnergy = field(
        default_factory=lambda: StructureEnergy(10.76, 16.70, 1.02, 0.211))
    rmt: StructureEnergy = field(
        default_factory=lambda: StructureEnergy(0.15, 0.20, 0.31, 0.004))
    amt: StructureEnergy = field(
        default_factory=lambda: StructureEnergy(1.58, 4.22, 0.74, 0.017))
    frequency_ghz: float = 3.2


def _counters(stats) -> dict:
    if isinstance(stats, dict):
        return stats.get("engine_counters", stats)
    return stats.engine_counters


def _cycles(stats) -> int:
    return stats["cycles"] if isinstance(stats, dict) else stats.cycles


def compute_energy(stats, model: EnergyModel | None = None) -> dict:
    """Energy in picojoules from a completed run's access counters."""
    model = model or EnergyModel()
    c = _counters(stats)
    cycles = _cycles(stats)
    seconds = cycles / (model.frequency_ghz * 1e9)
    out = {"dynamic_pj": {}, "leakage_pj": {}, "area_mm2": {}}
    total_dynamic = 0.0
    total_leak = 0.0
    for name, s in (("sld", model.sld), ("rmt", model.rmt), ("amt", model.amt)):
        reads = c.get(f"{name}_reads", 0)
        writes = c.get(f"{name}_writes", 0)
        dyn = reads * s.read_pj + writes * s.write_pj
        leak = s.leakage_mw * 1e-3 * seconds * 1e12  # mW * s -> pJ
        out["dynamic_pj"][name] = dyn
        out["leakage_pj"][name] = leak
        out["area_mm2"][name] = s.area_mm2
        total_dynamic += dyn
        total_leak += leak
    out["dynamic_total_pj"] = total_dynamic
    out["leakage_total_pj"] = total_leak
    out["total_pj"] = total_dynamic + total_leak
    return out


def classify_load_cycles(stats) -> dict:
    """Fractions of total cycles with any load port busy, split by stability."""
    if isinstance(stats, dict):
        cycles = stats["cycles"]
        utilized = stats["load_utilized_cycles"]
        stable = stats["stable_load_port_cycles"]
    else:
        cycles = stats.cycles
        utilized = stats.load_utilized_cycles
        stable = stats.stable_load_port_cycles
    if not cycles:
        return {"load_utilized_fraction": 0.0, "stable_on_port_fraction": 0.0,
                "only_nonstable_fraction": 0.0}
    return {
        "load_utilized_fraction": utilized / cycles,
        "stable_on_port_fraction": stable / cycles,
        "only_nonstable_fraction": (utilized - stable) / cycles,
    }


def _flat(stats) -> dict:
    return stats if isinstance(stats, dict) else stats.to_dict()


def compare_runs(stats_a, stats_b) -> dict:
    """Delta report between a reference run (a) and a modified run (b)."""
    a = _flat(stats_a)
    b = _flat(stats_b)

    def reduction(key):
        d = a[key] - b[key]
        pct = d / a[key] * 100.0 if a[key] else 0.0
        return {"absolute": d, "percent": pct}

    speedup = a["cycles"] / b["cycles"] if b["cycles"] else 0.0
    return {
        "engine_a": a["engine"], "engine_b": b["engine"],
        "mode_a": a["mode"], "mode_b": b["mode"],
        "cycles_a": a["cycles"], "cycles_b": b["cycles"],
        "speedup": speedup,
        "rs_allocation_reduction": reduction("rs_allocations"),
        "l1d_access_reduction": reduction("l1d_accesses"),
        "eliminated_loads": b["eliminated_loads"],
        "eliminated_retired": b["eliminated_retired"],
        "eliminated_squashed": b["eliminated_squashed"],
        "coverage": b["coverage"],
        "ordering_violation_flushes": b["ordering_violation_flushes"],
        "streams_identical": a["stream_digest"] == b["stream_digest"],
    }


def save_stats(stats, path: str) -> None:
    """Stats as JSON with stable key order; identical runs give identical bytes."""
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(_flat(stats), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def load_stats(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def _flatten_for_csv(d: dict, prefix: str = "") -> list[tuple[str, object]]:
    rows = []
    for k in sorted(d):
        v = d[k]
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            rows.extend(_flatten_for_csv(v, key + "."))
        else:
            rows.append((key, v))
    return rows


def save_stats_csv(stats, path: str) -> None:
    """Flat key,value CSV for spreadsheet import."""
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(("key", "value"))
            for key, val in _flatten_for_csv(_flat(stats)):
                w.writerow((key, val))
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
