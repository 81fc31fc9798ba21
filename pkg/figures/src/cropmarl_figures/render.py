"""Render benchmark figures from cropmarl result CSVs.

Consumes only the published CSV schema of the bench harness: the exact
eleven-column header below, with one aggregate row (agent_id = -1) per
(grid point, policy). Figures never recompute results; the CSV is the
single source of truth.

Four figure kinds mirror the headline experiments: total joint reward by
policy (bars over agent counts), runtime vs. agent count, reward vs.
slope coefficient, and reward vs. discount factor.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

RESULT_COLUMNS = [
    "experiment", "policy", "n_agents", "gamma", "slope_coefficient",
    "seed", "agent_id", "return", "total_reward", "welfare", "runtime_ms",
]

FIGURE_KINDS = ("joint-reward", "runtime", "slope", "discount")

# fixed styling keeps renders deterministic for a given input CSV
POLICY_COLORS = {"iql": "#d62728", "aba": "#1f77b4", "rollout": "#2ca02c"}
FALLBACK_COLORS = ("#9467bd", "#8c564b", "#e377c2", "#7f7f7f")
FIGSIZE = (6.0, 4.0)
DPI = 150


class SchemaError(ValueError):
    """Input CSV does not match the bench result schema."""


@dataclass
class FigureSpec:
    figure: str
    input_csv: str | Path
    output_path: str | Path

    def __post_init__(self) -> None:
        if self.figure not in FIGURE_KINDS:
            raise ValueError(
                f"unknown figure kind {self.figure!r}, expected one of {FIGURE_KINDS}"
            )


def load_aggregate_rows(path) -> list[dict]:
    """Parse the CSV, enforce the exact header, keep aggregate rows only."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected the result header")
        missing = [c for c in RESULT_COLUMNS if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
        if header != RESULT_COLUMNS:
            raise SchemaError(f"{path}: header {header} does not match the result schema")
        rows = []
        for rec in reader:
            row = dict(zip(RESULT_COLUMNS, rec))
            if int(row["agent_id"]) == -1:
                rows.append(row)
    if not rows:
        raise SchemaError(f"{path}: no aggregate rows")
    return rows


def _color(policy: str, index: int) -> str:
    return POLICY_COLORS.get(policy, FALLBACK_COLORS[index % len(FALLBACK_COLORS)])


def _series(rows: list[dict], x_column: str, y_column: str) -> dict[str, list[tuple[float, float]]]:
    """One (x, mean y) series per policy, seeds averaged, x ascending."""
    buckets: dict[str, dict[float, list[float]]] = defaultdict(lambda: defaultdict(list))
    for row in rows:
        buckets[row["policy"]][float(row[x_column])].append(float(row[y_column]))
    series = {}
    for policy in sorted(buckets):
        points = sorted((x, sum(ys) / len(ys)) for x, ys in buckets[policy].items())
        series[policy] = points
    return series


def render(spec: FigureSpec):
    """Render one figure and write it to spec.output_path.

    Returns the matplotlib Figure (useful for inspection in tests).
    """
    rows = load_aggregate_rows(spec.input_csv)
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)

    if spec.figure == "joint-reward":
        series = _series(rows, "n_agents", "total_reward")
        agent_counts = sorted({x for pts in series.values() for x, _ in pts})
        width = 0.8 / len(series)
        for k, (policy, points) in enumerate(series.items()):
            values = dict(points)
            offsets = [agent_counts.index(x) + k * width for x, _ in points]
            ax.bar(offsets, [values[x] for x, _ in points], width=width,
                   label=policy, color=_color(policy, k))
        ax.set_xticks([i + 0.4 - width / 2 for i in range(len(agent_counts))])
        ax.set_xticklabels([f"{int(x)}" for x in agent_counts])
        ax.set_xlabel("number of agents")
        ax.set_ylabel("total joint reward")
        ax.set_title("Total joint reward by policy")
    elif spec.figure == "runtime":
        series = _series(rows, "n_agents", "runtime_ms")
        for k, (policy, points) in enumerate(series.items()):
            ax.plot([x for x, _ in points], [y / 1000.0 for _, y in points],
                    marker="o", label=policy, color=_color(policy, k))
        ax.set_xlabel("number of agents")
        ax.set_ylabel("runtime (s)")
        ax.set_title("Runtime vs. number of agents")
    elif spec.figure == "slope":
        series = _series(rows, "slope_coefficient", "total_reward")
        for k, (policy, points) in enumerate(series.items()):
            ax.plot([x for x, _ in points], [y for _, y in points],
                    marker="o", label=policy, color=_color(policy, k))
        ax.set_xlabel("slope coefficient")
        ax.set_ylabel("total joint reward")
        ax.set_title("Total joint reward vs. slope coefficient")
    else:  # discount
        series = _series(rows, "gamma", "total_reward")
        for k, (policy, points) in enumerate(series.items()):
            ax.plot([x for x, _ in points], [y for _, y in points],
                    marker="o", label=policy, color=_color(policy, k))
        ax.set_xlabel("discount factor")
        ax.set_ylabel("total joint reward")
        ax.set_title("Total joint reward vs. discount factor")

    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(spec.output_path)
    plt.close(fig)
    return fig
