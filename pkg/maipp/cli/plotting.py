# maipp/cli/plotting.py

"""SVG figures of finished episodes and benchmark results."""

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
from matplotlib.figure import Figure

from maipp.core.errors import DomainError
from maipp.core.field import GroundTruth
from maipp.io.export import RESULT_COLUMNS, summarize
from maipp.io.persistence import EpisodeDump, load_episode

# Set up logging
logger = logging.getLogger(__name__)

PLOT_KINDS = ("trajectories", "belief", "std", "trace-curve", "summary")


def _unit_axes(ax) -> None:
    ax.set_xlim(0.0, 1.0)
    ax.set_ylim(0.0, 1.0)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")


def _heatmap(ax, values: np.ndarray, resolution: int, label: str, cmap: str):
    edges = np.linspace(0.0, 1.0, resolution + 1)
    mesh = ax.pcolormesh(edges, edges, values.reshape(resolution, resolution), cmap=cmap, shading="flat")
    mesh.set_gid("heatmap")
    ax.figure.colorbar(mesh, ax=ax, label=label)
    _unit_axes(ax)
    return mesh


def plot_trajectories(dump: EpisodeDump) -> Figure:
    fig, ax = plt.subplots(figsize=(5, 5))
    if dump.world:
        world = GroundTruth.from_records(dump.world, dump.resolution)
        _heatmap(ax, world.grid_values(), dump.resolution, "interest", "Greys")
    colors = plt.get_cmap("tab10")
    for i, traj in enumerate(dump.trajectories):
        if len(traj) == 0:
            continue
        (line,) = ax.plot(traj[:, 0], traj[:, 1], "-o", markersize=2, color=colors(i % 10), label=f"agent {i}")
        line.set_gid(f"trajectory-{i}")
    if dump.trajectories:
        start = dump.trajectories[0][0] if len(dump.trajectories[0]) else None
        if start is not None:
            ax.plot(start[0], start[1], "k*", markersize=10)
        ax.legend(loc="upper right", fontsize="small")
    _unit_axes(ax)
    ax.set_title(f"{dump.method}: Tr(P_f) = {dump.trace_final:.2f}")
    return fig


def plot_belief(dump: EpisodeDump, kind: str = "belief") -> Figure:
    fig, ax = plt.subplots(figsize=(5.5, 5))
    if kind == "belief":
        _heatmap(ax, dump.final_mean, dump.resolution, "posterior mean", "viridis")
    else:
        _heatmap(ax, np.sqrt(np.maximum(dump.final_variance, 0.0)), dump.resolution, "posterior std", "magma")
    ax.set_title(dump.method)
    return fig


def plot_trace_curve(dump: EpisodeDump) -> Figure:
    fig, ax = plt.subplots(figsize=(6, 4))
    if len(dump.curve):
        (line,) = ax.plot(dump.curve[:, 1], dump.curve[:, 2], label=dump.method)
        line.set_gid("trace-curve")
        ax.legend()
    ax.set_xlabel("team distance")
    ax.set_ylabel("Tr(P)")
    ax.set_ylim(bottom=0.0)
    return fig


def render(dump: EpisodeDump, kind: str) -> Figure:
    """
    Builds the figure of ``kind`` for an episode dump.

    Raises:
        DomainError: for an unknown kind
    """
    if kind == "trajectories":
        return plot_trajectories(dump)
    if kind in ("belief", "std"):
        return plot_belief(dump, kind)
    if kind == "trace-curve":
        return plot_trace_curve(dump)
    raise DomainError(f"unknown plot kind {kind!r}; expected one of {', '.join(PLOT_KINDS)}")


def save_svg(fig: Figure, out: Path) -> Path:
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, format="svg")
    plt.close(fig)
    return out


def plot_episode(episode_path: Path, kind: str, out: Path) -> Path:
    """Loads an episode dump and writes the requested figure as SVG."""
    dump = load_episode(episode_path)
    path = save_svg(render(dump, kind), out)
    logger.info(f"Wrote {kind} plot to {path}")
    return path


def plot_results(frame: pd.DataFrame) -> Figure:
    """Mean final trace per method with one standard deviation, one group per budget."""
    summary = summarize(frame)
    fig, ax = plt.subplots(figsize=(7, 4))
    budgets = sorted(summary["B"].unique())
    methods = list(dict.fromkeys(summary["method"]))
    width = 0.8 / max(len(methods), 1)
    for k, method in enumerate(methods):
        rows = summary[summary["method"] == method].groupby("B")["trace_mean"].mean().reindex(budgets)
        errs = summary[summary["method"] == method].groupby("B")["trace_std"].mean().reindex(budgets).fillna(0.0)
        ax.bar(np.arange(len(budgets)) + k * width, rows.to_numpy(), width, yerr=errs.to_numpy(), label=method)
    ax.set_xticks(np.arange(len(budgets)) + 0.4 - width / 2)
    ax.set_xticklabels([f"B={b:g}" for b in budgets])
    ax.set_ylabel("Tr(P_f)")
    ax.legend(fontsize="small")
    return fig


def plot_input(path: Path, kind: str, out: Path) -> Path:
    """
    Writes an SVG for an episode dump, or for a results CSV with kind ``summary``.

    Raises:
        CheckpointError: if the episode dump is missing or malformed
        DomainError: for an unknown kind or a results CSV without the expected columns
    """
    if kind == "summary":
        try:
            frame = pd.read_csv(path)
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise DomainError(f"cannot read results {path}: {e}") from e
        missing = set(RESULT_COLUMNS) - set(frame.columns)
        if missing:
            raise DomainError(f"results {path} lacks columns {sorted(missing)}")
        written = save_svg(plot_results(frame), out)
        logger.info(f"Wrote summary plot to {written}")
        return written
    return plot_episode(path, kind, out)
