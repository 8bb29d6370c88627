from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from constable.engine import ConstableConfig, ConstableEngine
from constable.memsys import CacheConfig, MemorySystem
from constable.pipeline import Simulator


def run_constable(trace, core=None, golden=True, cache=None, stable_pcs=None,
                  collect_stream=False, **engine_kwargs):
    """Simulate with a fresh constable engine; returns (stats, engine)."""
    cfg = ConstableConfig(**engine_kwargs)
    memsys = MemorySystem(cache or CacheConfig(), amt_i_mode=cfg.amt_i_mode)
    engine = ConstableEngine(cfg, memsys=memsys)
    sim = Simulator(trace, core=core, engine=engine, memsys=memsys,
                    golden_check=golden, stable_pcs=stable_pcs,
                    collect_stream=collect_stream)
    return sim.run(), engine


def run_baseline(trace, core=None, golden=True, cache=None,
                 collect_stream=False):
    sim = Simulator(trace, core=core, memsys=MemorySystem(cache or CacheConfig()),
                    golden_check=golden, collect_stream=collect_stream)
    return sim.run()


@pytest.fixture
def tmp_trace_path(tmp_path):
    return str(tmp_path / "t.trace")
