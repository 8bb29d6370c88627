"""Matplotlib renderers for the report paths.

Every renderer writes PNG files next to the delimited report output and
returns the list of paths it produced.  matplotlib is imported lazily so the
simulation paths never pay for it.
"""

from __future__ import annotations

import os

from .inspector import BINS, MODES, Aggregates, StaticLoadProfile
from .metrics import classify_load_cycles

_BIN_LABELS = {"lt50": "< 50", "d50_250": "50-250", "gt250": "> 250"}
_MODE_LABELS = {"pc_rel": "PC-relative", "stack_rel": "stack-relative",
                "reg_rel": "register-relative"}


def _plt():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def render_inspect_figures(profiles: dict[int, StaticLoadProfile],
                           aggregates: Aggregates, out_dir: str,
                           prefix: str = "inspect") -> list[str]:
    """Stable fraction, mode breakdown, and distance distributions."""
    plt = _plt()
    os.makedirs(out_dir, exist_ok=True)
    paths = []

    fig, axes = plt.subplots(1, 3, figsize=(12, 3.4))
    frac = aggregates.global_stable_dynamic_fraction
    axes[0].bar(["stable", "other"], [frac, 1 - frac], color=["#2a6f97", "#bbbbbb"])
    axes[0].set_ylim(0, 1)
    axes[0].set_title("globally stable fraction of dynamic loads")
    axes[1].bar([_MODE_LABELS[m] for m in MODES],
                [aggregates.mode_breakdown[m] for m in MODES], color="#2a6f97")
    axes[1].set_ylim(0, 1)
    axes[1].set_title("stable loads by addressing mode")
    axes[1].tick_params(axis="x", labelrotation=20)
    axes[2].bar([_BIN_LABELS[b] for b in BINS],
                [aggregates.distance_breakdown[b] for b in BINS], color="#2a6f97")
    axes[2].set_ylim(0, 1)
    axes[2].set_title("re-occurrence distance (instructions)")
    fig.tight_layout()
    p = os.path.join(out_dir, f"{prefix}_overview.png")
    fig.savefig(p, dpi=120)
    plt.close(fig)
    paths.append(p)

    fig, ax = plt.subplots(figsize=(6, 3.4))
    bottoms = [0.0] * len(MODES)
    colors = {"lt50": "#90be6d", "d50_250": "#f8961e", "gt250": "#d62839"}
    for b in BINS:
        vals = [aggregates.per_mode_distance_breakdown[m][b] for m in MODES]
        ax.bar([_MODE_LABELS[m] for m in MODES], vals, bottom=bottoms,
               label=_BIN_LABELS[b], color=colors[b])
        bottoms = [x + v for x, v in zip(bottoms, vals)]
    ax.set_ylim(0, 1)
    ax.set_title("distance mix per addressing mode")
    ax.legend(title="distance", fontsize=8)
    ax.tick_params(axis="x", labelrotation=20)
    fig.tight_layout()
    p = os.path.join(out_dir, f"{prefix}_mode_distance.png")
    fig.savefig(p, dpi=120)
    plt.close(fig)
    paths.append(p)
    return paths


def render_port_utilization(stats: dict, out_dir: str,
                            prefix: str = "ports") -> list[str]:
    """Load-port-utilized cycle fractions, split by load stability."""
    plt = _plt()
    os.makedirs(out_dir, exist_ok=True)
    cls = classify_load_cycles(stats)
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.bar(["any load", "stable on port", "only non-stable"],
           [cls["load_utilized_fraction"], cls["stable_on_port_fraction"],
            cls["only_nonstable_fraction"]],
           color=["#2a6f97", "#f8961e", "#bbbbbb"])
    ax.set_ylabel("fraction of total cycles")
    ax.set_ylim(0, max(0.05, cls["load_utilized_fraction"] * 1.3))
    ax.set_title("load port utilization")
    fig.tight_layout()
    p = os.path.join(out_dir, f"{prefix}_utilization.png")
    fig.savefig(p, dpi=120)
    plt.close(fig)
    return [p]


def render_compare_figure(delta: dict, out_dir: str,
                          prefix: str = "compare") -> list[str]:
    """Speedup plus resource reductions between two runs."""
    plt = _plt()
    os.makedirs(out_dir, exist_ok=True)
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.4))
    axes[0].bar(["speedup"], [delta["speedup"]], color="#2a6f97")
    axes[0].axhline(1.0, color="black", linewidth=0.8)
    axes[0].set_title(f"{delta['engine_b']}/{delta['mode_b']} vs "
                      f"{delta['engine_a']}/{delta['mode_a']}")
    axes[1].bar(["RS allocs", "L1-D accesses"],
                [delta["rs_allocation_reduction"]["percent"],
                 delta["l1d_access_reduction"]["percent"]], color="#90be6d")
    axes[1].set_ylabel("% reduction")
    axes[1].set_title(f"coverage {delta['coverage']:.1%}")
    fig.tight_layout()
    p = os.path.join(out_dir, f"{prefix}_delta.png")
    fig.savefig(p, dpi=120)
    plt.close(fig)
    return [p]
