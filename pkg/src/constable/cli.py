"""Command-line entry point: gen, inspect, sim, compare, verify, report.

Exit codes: 0 success, 1 usage error, 2 trace error, 3 golden-check
mismatch, 4 internal deadlock guard.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import multiprocessing
import os
import sys

from . import ideal, metrics, workload
from .engine import ConstableConfig, ConstableEngine, BaselineEngine
from .inspector import analyze, export_report
from .memsys import CacheConfig, MemorySystem
from .pipeline import (CoreConfig, Simulator, GoldenCheckMismatch,
                       StructuralDeadlock)
from .trace import Trace, TraceError, sanity_check

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_TRACE = 2
EXIT_GOLDEN = 3
EXIT_DEADLOCK = 4

_CONFIG_SECTIONS = {"core": CoreConfig, "cache": CacheConfig,
                    "engine": ConstableConfig, "gen": workload.GenConfig}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _coerce(text: str):
    low = text.strip()
    if low in ("true", "True"):
        return True
    if low in ("false", "False"):
        return False
    try:
        return int(low, 0)
    except ValueError:
        pass
    try:
        return float(low)
    except ValueError:
        return low


def parse_config_file(path: str) -> dict:
    """Flat `section.key = value` lines; later lines win."""
    out: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, val = line.partition("=")
            out[key.strip()] = _coerce(val)
    return out


def build_configs(overrides: dict):
    """Split dotted overrides into the four config dataclasses."""
    kwargs = {name: {} for name in _CONFIG_SECTIONS}
    for key, val in overrides.items():
        section, _, fld = key.partition(".")
        if section not in _CONFIG_SECTIONS or not fld:
            raise ValueError(f"unknown config key {key!r}")
        cls = _CONFIG_SECTIONS[section]
        if fld not in {f.name for f in dataclasses.fields(cls)}:
            raise ValueError(f"unknown config key {key!r}")
        kwargs[section][fld] = val
    return (CoreConfig(**kwargs["core"]), CacheConfig(**kwargs["cache"]),
            ConstableConfig(**kwargs["engine"]),
            workload.GenConfig(**kwargs["gen"]))


def _collect_overrides(args) -> dict:
    overrides = {}
    if getattr(args, "config", None):
        overrides.update(parse_config_file(args.config))
    for item in getattr(args, "set", None) or []:
        key, _, val = item.partition("=")
        if not val:
            raise ValueError(f"--set expects key=value, got {item!r}")
        overrides[key.strip()] = _coerce(val)
    return overrides


def _cmd_gen(args) -> int:
    overrides = _collect_overrides(args)
    if args.scenario:
        trace = workload.generate_scenario(args.scenario, seed=args.seed)
    else:
        gen_over = {k.split(".", 1)[1]: v for k, v in overrides.items()
                    if k.startswith("gen.")}
        if args.instructions is not None:
            gen_over["n_instructions"] = args.instructions
        gen_over["seed"] = args.seed
        trace = workload.generate(workload.GenConfig(**gen_over))
    trace.save(args.output)
    print(f"wrote {len(trace.records)} records to {args.output}")
    return EXIT_OK


def _cmd_inspect(args) -> int:
    trace = Trace.load(args.trace)
    profiles, aggregates = analyze(trace)
    export_report(profiles, aggregates, args.format, args.output)
    print(f"{aggregates.total_dynamic_loads} dynamic loads, "
          f"{aggregates.global_stable_dynamic_fraction:.1%} globally stable")
    if not args.no_figures:
        from .figures import render_inspect_figures
        out_dir = os.path.dirname(os.path.abspath(args.output))
        for p in render_inspect_figures(profiles, aggregates, out_dir):
            print(f"figure: {p}")
    return EXIT_OK


def _run_sim(trace: Trace, args, overrides: dict):
    core, cache, eng_cfg, _ = build_configs(overrides)
    if args.threshold is not None:
        eng_cfg = dataclasses.replace(eng_cfg, threshold=args.threshold)
    if args.amt_i:
        eng_cfg = dataclasses.replace(eng_cfg, amt_i_mode=True)
    if args.amt_index:
        eng_cfg = dataclasses.replace(eng_cfg, amt_index=args.amt_index)
    if args.inject_fault:
        eng_cfg = dataclasses.replace(
            eng_cfg, fault_injection=frozenset(args.inject_fault))
    profiles, _agg = analyze(trace)
    stable_pcs = frozenset(p.pc for p in profiles.values() if p.is_global_stable)
    if args.mode != "baseline":
        return ideal.run_ideal(trace, args.mode, profiles, core=core,
                               cache=cache, golden_check=args.golden_check)
    memsys = MemorySystem(cache, amt_i_mode=eng_cfg.amt_i_mode)
    if args.engine == "constable":
        engine = ConstableEngine(eng_cfg, memsys=memsys)
    else:
        engine = BaselineEngine()
    sim = Simulator(trace, core=core, engine=engine, memsys=memsys,
                    golden_check=args.golden_check, stable_pcs=stable_pcs)
    return sim.run()


def _cmd_sim(args) -> int:
    overrides = _collect_overrides(args)
    trace = Trace.load(args.trace)
    stats = _run_sim(trace, args, overrides)
    if args.output:
        metrics.save_stats(stats, args.output)
        if args.output.endswith(".json"):
            metrics.save_stats_csv(stats, args.output[:-5] + ".csv")
    print(f"{stats.engine}/{stats.mode}: {stats.cycles} cycles, "
          f"ipc {stats.ipc:.2f}, eliminated {stats.eliminated_retired}, "
          f"flushes {stats.ordering_violation_flushes}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    a = metrics.load_stats(args.stats_a)
    b = metrics.load_stats(args.stats_b)
    delta = metrics.compare_runs(a, b)
    with open(args.output, "w", encoding="utf-8") as fh:
        json.dump(delta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"speedup {delta['speedup']:.3f}, "
          f"l1d -{delta['l1d_access_reduction']['percent']:.1f}%, "
          f"rs -{delta['rs_allocation_reduction']['percent']:.1f}%")
    if not args.no_figures:
        from .figures import render_compare_figure
        out_dir = os.path.dirname(os.path.abspath(args.output))
        for p in render_compare_figure(delta, out_dir):
            print(f"figure: {p}")
    return EXIT_OK


def _verify_one(task) -> tuple[int, str, bool, str]:
    seed, n_instructions = task
    cfg = workload.GenConfig(
        n_instructions=n_instructions,
        seed=seed,
        stable_load_fraction=0.5,
        store_interference_rate=0.05,
        silent_store_rate=0.4,
        snoop_rate=0.01,
        register_overwrite_rate=0.02,
        ordering_violation_rate=0.003,
        context_switch_rate=0.0005,
        stable_line_stride=32 if seed % 4 == 3 else 1,
    )
    trace = workload.generate(cfg)
    variant = seed % 4
    eng_cfg = ConstableConfig(
        amt_i_mode=(variant == 1),
        amt_index="full" if variant == 2 else "line",
        threshold=14 if variant == 3 else 30,
    )
    memsys = MemorySystem(amt_i_mode=eng_cfg.amt_i_mode)
    engine = ConstableEngine(eng_cfg, memsys=memsys)
    sim = Simulator(trace, engine=engine, memsys=memsys, golden_check=True)
    try:
        stats = sim.run()
    except GoldenCheckMismatch as exc:
        return seed, f"variant {variant}", False, str(exc)
    return (seed, f"variant {variant}", True,
            f"eliminated {stats.eliminated_retired}/{stats.retired_loads}, "
            f"flushes {stats.ordering_violation_flushes}")


def _cmd_verify(args) -> int:
    tasks = [(seed, args.instructions) for seed in range(args.seeds)]
    jobs = args.jobs or min(8, os.cpu_count() or 1)
    if jobs > 1:
        with multiprocessing.get_context("fork").Pool(jobs) as pool:
            results = pool.map(_verify_one, tasks)
    else:
        results = [_verify_one(t) for t in tasks]
    failures = 0
    for seed, variant, ok, detail in sorted(results):
        tag = "ok" if ok else "MISMATCH"
        print(f"seed {seed:4d} [{variant}]: {tag} ({detail})")
        failures += not ok
    print(f"{args.seeds - failures}/{args.seeds} seeds clean")
    return EXIT_OK if failures == 0 else EXIT_GOLDEN


def _cmd_report(args) -> int:
    from .figures import (render_compare_figure, render_inspect_figures,
                          render_port_utilization)
    os.makedirs(args.output, exist_ok=True)
    produced = []
    rows = []
    stats_list = [metrics.load_stats(p) for p in args.stats]
    for i, stats in enumerate(stats_list):
        name = os.path.splitext(os.path.basename(args.stats[i]))[0]
        produced += render_port_utilization(stats, args.output, prefix=name)
        for key in ("engine", "mode", "cycles", "ipc", "retired_instructions",
                    "retired_loads", "eliminated_retired", "l1d_accesses",
                    "rs_allocations", "ordering_violation_flushes"):
            rows.append((name, key, stats.get(key)))
        energy = metrics.compute_energy(stats)
        rows.append((name, "dynamic_energy_pj", energy["dynamic_total_pj"]))
        rows.append((name, "leakage_energy_pj", energy["leakage_total_pj"]))
    if len(stats_list) == 2:
        delta = metrics.compare_runs(stats_list[0], stats_list[1])
        produced += render_compare_figure(delta, args.output)
        for key in ("speedup", "coverage"):
            rows.append(("delta", key, delta[key]))
    if args.inspect:
        trace = Trace.load(args.inspect)
        profiles, aggregates = analyze(trace)
        produced += render_inspect_figures(profiles, aggregates, args.output)
    summary = os.path.join(args.output, "summary.csv")
    with open(summary, "w", encoding="utf-8") as fh:
        fh.write("run,key,value\n")
        for run_name, key, value in rows:
            fh.write(f"{run_name},{key},{value}\n")
    print(f"report: {summary}")
    for p in produced:
        print(f"figure: {p}")
    return EXIT_OK


def make_parser() -> _Parser:
    p = _Parser(prog="constable",
                description="Trace-driven out-of-order core simulator with "
                            "stable-load execution elimination.",
                epilog="Config keys (for --set and config files): "
                       "core.* (rename_width, rob_size, lb_size, sb_size, "
                       "rs_size, alu_ports, agu_ports, load_ports, sta_ports, "
                       "std_ports, store_address_delay, load_width_multiplier, "
                       "flush_penalty), cache.* (l1_bytes, l1_ways, l2_bytes, "
                       "l2_ways, l1_latency, l2_latency, memory_latency), "
                       "engine.* (threshold, confidence_bits, xprf_size, "
                       "sld_read_ports, sld_write_ports, amt_index, amt_i_mode, "
                       "rmt_stack_capacity, rmt_reg_capacity), gen.* "
                       "(n_instructions, seed, stable_load_fraction, ...).")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic or scenario trace")
    g.add_argument("-o", "--output", required=True)
    g.add_argument("-n", "--instructions", type=int, default=None)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--scenario", choices=workload.SCENARIOS, default=None)
    g.add_argument("--config", help="key = value config file")
    g.add_argument("--set", action="append", metavar="KEY=VALUE")
    g.set_defaults(func=_cmd_gen)

    i = sub.add_parser("inspect", help="offline stable-load analysis")
    i.add_argument("trace")
    i.add_argument("--format", choices=("csv", "json"), default="csv")
    i.add_argument("-o", "--output", required=True)
    i.add_argument("--no-figures", action="store_true")
    i.set_defaults(func=_cmd_inspect)

    s = sub.add_parser("sim", help="simulate a trace")
    s.add_argument("trace")
    s.add_argument("--engine", choices=("none", "constable"), default="none")
    s.add_argument("--mode", default="baseline",
                   choices=("baseline",) + ideal.MODES)
    s.add_argument("--golden-check", action="store_true")
    s.add_argument("--amt-i", action="store_true",
                   help="invalidate monitor entries on every L1 eviction "
                        "instead of pinning directory CV bits")
    s.add_argument("--amt-index", choices=("line", "full"), default=None)
    s.add_argument("--threshold", type=int, default=None)
    s.add_argument("--inject-fault", action="append",
                   choices=("store_hook", "snoop_hook", "register_hook"),
                   help="drop an update hook to demonstrate the golden check")
    s.add_argument("--config", help="key = value config file")
    s.add_argument("--set", action="append", metavar="KEY=VALUE")
    s.add_argument("-o", "--output")
    s.set_defaults(func=_cmd_sim)

    c = sub.add_parser("compare", help="delta report between two stats files")
    c.add_argument("stats_a")
    c.add_argument("stats_b")
    c.add_argument("-o", "--output", required=True)
    c.add_argument("--no-figures", action="store_true")
    c.set_defaults(func=_cmd_compare)

    v = sub.add_parser("verify", help="randomized end-to-end golden-check suite")
    v.add_argument("--seeds", type=int, default=200)
    v.add_argument("--instructions", type=int, default=100000)
    v.add_argument("--jobs", type=int, default=None)
    v.set_defaults(func=_cmd_verify)

    r = sub.add_parser("report", help="figures and summary from stats files")
    r.add_argument("--stats", nargs="+", required=True)
    r.add_argument("--inspect", help="trace to analyze for workload figures")
    r.add_argument("-o", "--output", required=True)
    r.set_defaults(func=_cmd_report)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except TraceError as exc:
        print(f"trace error: {exc}", file=sys.stderr)
        return EXIT_TRACE
    except (workload.InfeasibleConfig, workload.UnknownScenario,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GoldenCheckMismatch as exc:
        print(f"golden check mismatch: {exc}", file=sys.stderr)
        return EXIT_GOLDEN
    except StructuralDeadlock as exc:
        print(f"deadlock guard: {exc}", file=sys.stderr)
        return EXIT_DEADLOCK


if __name__ == "__main__":
    sys.exit(main())
