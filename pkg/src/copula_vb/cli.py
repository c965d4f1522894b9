from __future__ import annotations

import json
import logging
from typing import Optional

import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from .config import ExperimentConfig, load_config, load_settings
from .errors import ConfigError
from .experiments import run_experiment
from .gmm.registry import algorithm_names, make_algorithm

app = typer.Typer(add_completion=False, help="copula-vb - CVB/VB/EM/k-means experiments as KL projections")
console = Console()

algorithms_app = typer.Typer(help="Clustering algorithms")
app.add_typer(algorithms_app, name="algorithms")


def _setup_logging(level: str) -> None:
    logging.basicConfig(
        level=level.upper(),
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def _load(config: str, experiment: Optional[str]) -> ExperimentConfig:
    try:
        return load_config(config, experiment=experiment)
    except ConfigError as e:
        console.print(f"[red]Config error:[/red] {e}")
        raise typer.Exit(code=2) from e


@algorithms_app.command("list")
def algorithms_list():
    for n in algorithm_names():
        typer.echo(f"{n}\t{type(make_algorithm(n)).__name__}")


@app.command()
def run(
    config: str = typer.Option(..., help="Experiment config (TOML)"),
    out: Optional[str] = typer.Option(None, help="Output directory (overrides [output].out_dir)"),
    threads: Optional[int] = typer.Option(None, min=1, help="Worker threads for the Monte Carlo loop"),
    experiment: Optional[str] = typer.Option(None, help="bivariate|gmm|oracle-check (overrides the file)"),
    quiet: bool = typer.Option(False, help="Hide the progress bar"),
    log_level: Optional[str] = typer.Option(None, help="Logging level (default from COPULA_VB_LOG_LEVEL)"),
    env_file: Optional[str] = typer.Option(None, help="Path to .env"),
):
    """Run one experiment suite and write runs.csv, summary.json and optional traces."""
    settings = load_settings(env_file)
    _setup_logging(log_level or settings.log_level)
    cfg = _load(config, experiment)

    console.print(f"[bold]Running[/bold] {cfg.experiment} ({cfg.seeds.count} seeds)")
    try:
        status = run_experiment(cfg, out, threads, progress=not quiet, settings=settings)
    except ConfigError as e:
        console.print(f"[red]Output error:[/red] {e}")
        raise typer.Exit(code=2) from e

    if status != 0:
        console.print(f"[red]Violations found[/red] (see summary.json); exit status {status}")
        raise typer.Exit(code=status)
    console.print(f"[green]OK[/green] {cfg.experiment}")


@app.command("show-config")
def show_config(
    config: str = typer.Option(..., help="Experiment config (TOML)"),
    experiment: Optional[str] = typer.Option(None, help="bivariate|gmm|oracle-check (overrides the file)"),
):
    """Print the validated config with every default filled in."""
    cfg = _load(config, experiment)
    typer.echo(json.dumps(cfg.model_dump(), indent=2, sort_keys=True))


@app.command()
def describe(
    config: str = typer.Option(..., help="Experiment config (TOML)"),
):
    """Summarize the run grid a config would execute."""
    cfg = _load(config, None)
    table = Table(title=f"{cfg.experiment}")
    table.add_column("setting")
    table.add_column("value")
    table.add_row("seeds", f"{cfg.seeds.count} (base {cfg.seeds.base})")
    table.add_row("stopping", f"epsilon={cfg.stopping.epsilon:g}, max_iters={cfg.stopping.max_iters}")
    if cfg.experiment == "bivariate":
        b = cfg.bivariate
        table.add_row("model", f"sigma=({b.sigma1:g}, {b.sigma2:g}), rho={b.rho:g}")
        table.add_row("rho grid step", f"{b.rho_step:g}")
    elif cfg.experiment == "gmm":
        g = cfg.gmm
        table.add_row("K, N", f"{g.K}, {g.N}")
        table.add_row("radii", ", ".join(f"{r:g}" for r in g.radii))
        table.add_row("algorithms", ", ".join(g.algorithms))
        table.add_row("runs", str(len(g.radii) * cfg.seeds.count))
    else:
        o = cfg.oracle
        table.add_row("K, sizes", f"{o.K}, {o.sizes}")
        table.add_row("radius range", f"[{o.radius_min:g}, {o.radius_max:g}]")
        table.add_row("algorithms", ", ".join(o.algorithms))
    console.print(table)
