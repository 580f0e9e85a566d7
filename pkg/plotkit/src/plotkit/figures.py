"""Figure rendering from experiment CSVs.

Consumes only the documented CSV schemas (training history, sweep, gain
study); nothing here imports the experiment harness. Visual conventions:
orange for photon counting and global-best curves, blue for homodyne and
per-epoch curves; dashed lines mark the 1/M random-guess baseline.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

ORANGE = "#e66100"
BLUE = "#1f77b4"

STRATEGY_COLORS = {"counting": ORANGE, "homodyne": BLUE}
ARM_MARKERS = {"gained": "o", "rescaled": "x"}

HISTORY_COLUMNS = ("epoch", "loss_best", "loss_gbest", "acc_best", "acc_gbest")
SWEEP_COLUMNS = ("task", "strategy", "modes", "sigma_c", "gain", "seed",
                 "final_acc_best", "final_acc_gbest", "epochs", "random_guess")
GAIN_COLUMNS = ("arm",) + SWEEP_COLUMNS


class SchemaError(ValueError):
    """Input CSV does not match the declared schema."""


class FigureKind(str, Enum):
    HISTORY = "history"
    SIGMA_SWEEP = "sigma_sweep"
    MODE_SWEEP = "mode_sweep"
    GAIN_STUDY = "gain_study"


REQUIRED_COLUMNS = {
    FigureKind.HISTORY: HISTORY_COLUMNS,
    FigureKind.SIGMA_SWEEP: SWEEP_COLUMNS,
    FigureKind.MODE_SWEEP: SWEEP_COLUMNS,
    FigureKind.GAIN_STUDY: GAIN_COLUMNS,
}


@dataclass(frozen=True)
class FigureSpec:
    kind: FigureKind
    inputs: tuple = field(default_factory=tuple)
    output: Path = Path("figure.png")

    def __post_init__(self):
        object.__setattr__(self, "kind", FigureKind(self.kind))
        object.__setattr__(self, "inputs", tuple(Path(p) for p in self.inputs))
        object.__setattr__(self, "output", Path(self.output))
        if not self.inputs:
            raise SchemaError("at least one input CSV is required")


def load_rows(path, required):
    """Read one CSV, checking the header against the required columns."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [col for col in required if col not in header]
        if missing:
            raise SchemaError(f"{path}: missing column {missing[0]!r}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def _gather(spec):
    rows = []
    for path in spec.inputs:
        rows.extend(load_rows(path, REQUIRED_COLUMNS[spec.kind]))
    return rows


def _floats(rows, column):
    return np.array([float(r[column]) for r in rows])


def _draw_history(ax, rows):
    epochs = _floats(rows, "epoch")
    ax.plot(epochs, _floats(rows, "acc_best"), color=BLUE,
            label="epoch best")
    ax.plot(epochs, _floats(rows, "acc_gbest"), color=ORANGE,
            label="global best")
    ax.set_xlabel("epoch")
    ax.set_ylabel("accuracy")


def _draw_sweep(ax, rows, x_column):
    for strategy, color in STRATEGY_COLORS.items():
        subset = [r for r in rows if r["strategy"] == strategy]
        if subset:
            ax.scatter(_floats(subset, x_column),
                       _floats(subset, "final_acc_gbest"),
                       color=color, s=18, label=strategy)
    ax.set_ylabel("final accuracy")


def _draw_baseline(ax, rows):
    points = sorted({(float(r["modes"]), float(r["random_guess"]))
                     for r in rows})
    xs, ys = zip(*points)
    if len(points) == 1:
        ax.axhline(ys[0], color="gray", linestyle="--", label="random guess 1/M")
    else:
        ax.plot(xs, ys, color="gray", linestyle="--", label="random guess 1/M")


def _draw_sigma_sweep(ax, rows):
    _draw_sweep(ax, rows, "sigma_c")
    _draw_baseline(ax, rows)
    ax.set_xscale("log")
    ax.set_xlabel("signal strength sigma_c")


def _draw_mode_sweep(ax, rows):
    _draw_sweep(ax, rows, "modes")
    _draw_baseline(ax, rows)
    ax.set_xlabel("mode count M")


def _draw_gain_study(ax, rows):
    for arm, marker in ARM_MARKERS.items():
        subset = [r for r in rows if r["arm"] == arm]
        if subset:
            ax.scatter(_floats(subset, "gain"),
                       _floats(subset, "final_acc_gbest"),
                       color=STRATEGY_COLORS.get(subset[0]["strategy"], ORANGE),
                       marker=marker, s=24, label=arm)
    ax.set_xlabel("gain G")
    ax.set_ylabel("final accuracy")


DRAWERS = {
    FigureKind.HISTORY: _draw_history,
    FigureKind.SIGMA_SWEEP: _draw_sigma_sweep,
    FigureKind.MODE_SWEEP: _draw_mode_sweep,
    FigureKind.GAIN_STUDY: _draw_gain_study,
}


def render(spec: FigureSpec) -> Path:
    """Render the figure; nothing is written unless the inputs validate."""
    rows = _gather(spec)
    fig, ax = plt.subplots(figsize=(5.0, 3.4), dpi=150)
    try:
        DRAWERS[spec.kind](ax, rows)
        ax.legend(frameon=False)
        fig.tight_layout()
        spec.output.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(spec.output)
    finally:
        plt.close(fig)
    return spec.output
