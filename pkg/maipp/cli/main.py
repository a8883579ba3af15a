# maipp/cli/main.py

import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Optional

import numpy as np
import typer
from pydantic import ValidationError
from rich import print
from rich.logging import RichHandler
from rich.panel import Panel

from maipp.cli.benchmark import load_policy_for, run_benchmark, summary_table
from maipp.cli.config import dump_config, load_config
from maipp.cli.plotting import PLOT_KINDS, plot_input
from maipp.core.errors import MaippError
from maipp.io.export import write_graph_csv, write_grid_csv, write_trajectories_csv
from maipp.io.persistence import load_checkpoint, save_episode, save_world
from maipp.sim.instances import make_instance
from maipp.train.evaluate import run_trial
from maipp.train.ppo import Trainer

app = typer.Typer(help="Multi-agent informative path planning: worlds, episodes, benchmarks and training.")

ConfigOption = typer.Option(None, "--config", help="YAML experiment file.")
SeedOption = typer.Option(None, "--seed", help="Overrides the config seed.")
OutOption = typer.Option(None, "--out", help="Output directory (defaults to the config's).")
JobsOption = typer.Option(1, "--jobs", min=1, help="Worker processes.")
CheckpointOption = typer.Option(None, "--checkpoint", help="Policy checkpoint for learned methods.")


@contextmanager
def _diagnostics():
    """Turns toolkit, validation and file errors into a red panel and exit code 1."""
    try:
        yield
    except (MaippError, ValidationError, OSError) as e:
        print(Panel(str(e), title=f"[bold red]{type(e).__name__}[/bold red]", border_style="red"))
        raise typer.Exit(1)


@app.callback()
def main(verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging.")):
    """Sets up rich logging for every subcommand."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        handlers=[RichHandler(rich_tracebacks=True, show_path=False)],
        force=True,
    )


@app.command("gen-world")
def gen_world(
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
    instance: int = typer.Option(0, "--instance", min=0, help="Instance index."),
):
    """Generates one benchmark instance: hidden field, shared start and per-agent roadmaps."""
    with _diagnostics():
        cfg = load_config(config, seed, out)
        out_dir = cfg.output.directory / f"instance_{instance:03d}"
        inst = make_instance(cfg.seed, instance, cfg.episode.m, cfg.field, cfg.graph, cfg.episode.random_start)
        save_world(out_dir / "world.msgpack", inst.world, inst.start, seed=cfg.seed, instance=instance)
        write_grid_csv(out_dir / "ground_truth.csv", inst.world.grid_values(), inst.world.resolution)
        for i, graph in enumerate(inst.graphs):
            write_graph_csv(out_dir / f"graph_{i}_nodes.csv", out_dir / f"graph_{i}_edges.csv", graph)
        print(
            f"✅ Instance {instance}: {len(inst.world.components)} components, "
            f"start ({inst.start[0]:.3f}, {inst.start[1]:.3f}), {len(inst.graphs)} roadmaps -> {out_dir}"
        )


@app.command()
def run(
    method: str = typer.Option("RRT(0.3,0.4)", "--method", help="Method label, e.g. TI(8,5)* or RRT(0.3,0.4)."),
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
    checkpoint: Optional[Path] = CheckpointOption,
    instance: int = typer.Option(0, "--instance", min=0),
    trial: int = typer.Option(0, "--trial", min=0),
):
    """Runs a single episode and stores its dump, posterior grids and trajectories."""
    with _diagnostics():
        cfg = load_config(config, seed, out, checkpoint, overrides={"methods": [method]})
        net = load_policy_for(cfg)
        inst = make_instance(cfg.seed, instance, cfg.episode.m, cfg.field, cfg.graph, cfg.episode.random_start)
        result, metrics = run_trial(cfg, method, instance, trial, net=net, instance=inst)
        out_dir = cfg.output.directory
        stem = f"episode_{instance:03d}_{trial:03d}"
        save_episode(out_dir / f"{stem}.msgpack", metrics, result.method, inst.world)
        write_grid_csv(out_dir / f"{stem}_mean.csv", metrics.final_mean, inst.world.resolution)
        write_grid_csv(out_dir / f"{stem}_variance.csv", metrics.final_variance, inst.world.resolution)
        write_trajectories_csv(out_dir / f"{stem}_trajectories.csv", metrics.trajectories)
        lengths = ", ".join(f"{c:.2f}" for c in metrics.executed_lengths)
        print(f"✅ {result.method}: Tr(P_f) = {result.trace_final:.3f}; path lengths [{lengths}] -> {out_dir}")


@app.command()
def bench(
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
    jobs: int = JobsOption,
    checkpoint: Optional[Path] = CheckpointOption,
):
    """Runs every method over the instance x trial grid and aggregates Tr(P_f)."""
    with _diagnostics():
        cfg = load_config(config, seed, out, checkpoint)
        out_dir = cfg.output.directory
        dump_config(cfg, out_dir / "config.yaml")
        outcome = run_benchmark(cfg, jobs=jobs, out_dir=out_dir, show_progress=True)
        print(summary_table(outcome.summary))
        print(f"✅ {len(outcome.rows)} rows written to {outcome.results_path}")


@app.command()
def train(
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
    jobs: int = JobsOption,
    checkpoint: Optional[Path] = CheckpointOption,
):
    """Trains the shared policy with PPO, optionally starting from a checkpoint."""
    with _diagnostics():
        cfg = load_config(config, seed, out, checkpoint)
        net = None
        if cfg.checkpoint is not None:
            net, meta = load_checkpoint(cfg.checkpoint)
            print(f"Resuming from {cfg.checkpoint} (update {meta.get('update', 0)})")
        out_dir = cfg.output.directory
        dump_config(cfg, out_dir / "config.yaml")
        trainer = Trainer(cfg, net)
        log = trainer.train(out_dir, jobs=jobs)
        returns = [entry["mean_return"] for entry in log]
        print(
            f"✅ {len(log)} updates; mean return {np.mean(returns[:1]):.4f} -> {np.mean(returns[-1:]):.4f}; "
            f"checkpoints in {out_dir}"
        )


@app.command()
def plot(
    source: Path = typer.Argument(..., help="Episode dump (.msgpack) or results CSV."),
    kind: str = typer.Option("trajectories", "--kind", help=f"One of: {', '.join(PLOT_KINDS)}."),
    out: Path = typer.Option(Path("plot.svg"), "--out", help="SVG file to write."),
):
    """Renders an SVG figure from an episode dump or a results CSV."""
    with _diagnostics():
        path = plot_input(source, kind, out)
        print(f"✅ Wrote {path}")


if __name__ == "__main__":
    app()
