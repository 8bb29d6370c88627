"""Oracle-driven headroom configurations that bound the trained engine.

All four modes identify the globally stable load PCs offline (from an
inspector profile of the same trace) and bypass the confidence machinery:

  ideal-constable   every instance of a stable PC completes at rename and
                    consumes no RS entry, AGU port, load port, or L1-D access
  ideal-lvp         dependents wake at rename with the correct value, but the
                    load executes in full
  ideal-lvp-dfe     as ideal-lvp, but the load stops after address generation
                    and never touches a load port or the L1-D
  2x-load           plain core with doubled AGU and load-port counts
"""

from __future__ import annotations

from dataclasses import replace

from .engine import (NORMAL, ELIMINATE, VALUE_AT_RENAME,
                     VALUE_AT_RENAME_NO_FETCH, BaselineEngine)
from .memsys import MemorySystem, CacheConfig
from .pipeline import CoreConfig, SimStats, Simulator
from .trace import Trace

IDEAL_CONSTABLE = "ideal-constable"
IDEAL_LVP = "ideal-lvp"
IDEAL_LVP_DFE = "ideal-lvp-dfe"
TWO_X_LOAD = "2x-load"
MODES = (IDEAL_CONSTABLE, IDEAL_LVP, IDEAL_LVP_DFE, TWO_X_LOAD)


class ProfileTraceMismatch(Exception):
    pass


class OracleEngine(BaselineEngine):
    """Eliminates or value-feeds stable-PC loads using trace ground truth."""

    has_sld = False

    def __init__(self, stable: dict[int, tuple[int, int]], decision: int):
        super().__init__()
        self.stable = stable
        self.decision = decision
        self.name = {ELIMINATE: IDEAL_CONSTABLE,
                     VALUE_AT_RENAME: IDEAL_LVP,
                     VALUE_AT_RENAME_NO_FETCH: IDEAL_LVP_DFE}[decision]

    def lookup_at_rename(self, rec):
        pair = self.stable.get(rec.pc)
        if pair is None:
            return NORMAL, 0, 0
        if pair != (rec.paddr, rec.value):
            raise ProfileTraceMismatch(
                f"pc {rec.pc:#x} marked stable at {pair} but instance "
                f"seq {rec.seq_no} has ({rec.paddr:#x}, {rec.value:#x})")
        if self.decision == ELIMINATE:
            self.counters["eliminations"] += 1
        return self.decision, rec.value, rec.paddr


def stable_pc_map(profiles) -> dict[int, tuple[int, int]]:
    """pc -> (paddr, value) over the globally stable profiles."""
    return {p.pc: (p.stable_paddr, p.stable_value)
            for p in profiles.values() if p.is_global_stable}


def run_ideal(trace: Trace, mode: str, profiles, core: CoreConfig | None = None,
              cache: CacheConfig | None = None, golden_check: bool = False,
              collect_stream: bool = False) -> SimStats:
    """Simulate a trace under one of the headroom configurations."""
    if mode not in MODES:
        raise ValueError(f"unknown ideal mode {mode!r}")
    core = core or CoreConfig()
    stable = stable_pc_map(profiles)
    stable_pcs = frozenset(stable)
    if mode == TWO_X_LOAD:
        core = replace(core, load_width_multiplier=2 * core.load_width_multiplier)
        engine = BaselineEngine()
    else:
        decision = {IDEAL_CONSTABLE: ELIMINATE,
                    IDEAL_LVP: VALUE_AT_RENAME,
                    IDEAL_LVP_DFE: VALUE_AT_RENAME_NO_FETCH}[mode]
        engine = OracleEngine(stable, decision)
    sim = Simulator(trace, core=core, engine=engine,
                    memsys=MemorySystem(cache),
                    golden_check=golden_check, stable_pcs=stable_pcs,
                    collect_stream=collect_stream)
    stats = sim.run()
    stats.mode = mode
    return stats
