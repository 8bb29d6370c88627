"""Trace-driven out-of-order core simulator with stable-load elimination."""

from .trace import (Trace, TraceRecord, read_trace, write_trace,
                    replay_functional, sanity_check, TraceError,
                    MalformedLine, UnsupportedVersion, NonMonotonicSeqNo,
                    IoFailure)
from .workload import (GenConfig, generate, generate_scenario, SCENARIOS,
                       InfeasibleConfig, UnknownScenario)
from .inspector import analyze, addressing_mode, export_report, EmptySourceSet
from .memsys import CacheConfig, MemorySystem
from .engine import ConstableConfig, ConstableEngine, BaselineEngine
from .pipeline import (CoreConfig, SimStats, Simulator, run,
                       GoldenCheckMismatch, StructuralDeadlock)
from .ideal import run_ideal, MODES as IDEAL_MODES, ProfileTraceMismatch
from .metrics import (EnergyModel, compute_energy, classify_load_cycles,
                      compare_runs, save_stats, load_stats)

__version__ = "0.1.0"
