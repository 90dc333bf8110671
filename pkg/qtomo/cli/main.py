"""
CLI interface for Qtomo using Typer.
"""

import json
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import typer

from qtomo import __version__
from qtomo.logging_config import logger
from qtomo.core.errors import ConfigError, QtomoError
from qtomo.core.plot_data import emit_plot_data
from qtomo.core.scenario import ReportBundle, load_scenario, read_scenario, run_scenario


app = typer.Typer(
    name="qtomo",
    help="Qtomo - monitor placement and tomography for quantum networks",
    add_completion=False,
)


def _fail(e: Exception) -> None:
    if isinstance(e, QtomoError):
        typer.echo(json.dumps(e.to_document(), sort_keys=True, default=str), err=True)
        raise typer.Exit(code=2)
    typer.secho(f"✗ Error: {e}", fg=typer.colors.RED, err=True)
    raise typer.Exit(code=1)


def _execute(action: Callable[[], ReportBundle]) -> None:
    try:
        bundle = action()
    except Exception as e:
        logger.debug(f"Command failed: {type(e).__name__}")
        _fail(e)
        return
    typer.secho(f"✓ {bundle.kind} report written to {bundle.directory}", fg=typer.colors.GREEN)
    for name in bundle.files:
        typer.echo(f"  {name}")


def _scenario(task: str, network: Path, **fields: Any) -> ReportBundle:
    document: Dict[str, Any] = {"task": task, "network": str(network)}
    document.update({k: v for k, v in fields.items() if v is not None})
    return run_scenario(load_scenario(document))


def _integers(value: str, option: str) -> List[int]:
    try:
        return [int(p) for p in value.split(",")]
    except ValueError as e:
        raise ConfigError(f"--{option} expects integers, got {value!r}", {"option": option, "value": value}) from e


def _capacity(value: Optional[str]) -> Any:
    """`minimal`, one integer, or a comma-separated list."""
    if value is None or value == "minimal":
        return value
    parts = _integers(value, "capacity")
    return parts[0] if len(parts) == 1 else parts


def _n_grid(value: Optional[str]) -> Optional[List[int]]:
    return _integers(value, "n-grid") if value else None


NETWORK = typer.Argument(..., help="Network YAML file")
OUTPUT = typer.Option(None, "--output-dir", "-o", help="Report bundle directory")
MODE = typer.Option(None, help="Indirect scoring: cross-term, two-hop or chain-rule")
SEMANTICS = typer.Option("learnable", help="Path rule: learnable or strict-same-monitor")


@app.command("optimize")
def optimize(
    network: Path = NETWORK,
    monitors: int = typer.Option(..., "--monitors", "-m", help="Number of monitors"),
    objective: str = typer.Option("QF", help="QF or QMF"),
    capacity: Optional[str] = typer.Option(None, help="L*: integer, comma list, or 'minimal'"),
    mode: Optional[str] = MODE,
    semantics: str = SEMANTICS,
    output_dir: Optional[Path] = OUTPUT,
):
    """Solve the QF or QMF placement program exactly."""
    _execute(lambda: _scenario(
        "optimize", network, monitors=monitors, objective=objective, capacity=_capacity(capacity),
        mode=mode, semantics=semantics, output_dir=output_dir,
    ))


@app.command("star-fast")
def star_fast(
    network: Path = NETWORK,
    monitors: int = typer.Option(..., "--monitors", "-m", help="Number of monitors"),
    capacity: Optional[str] = typer.Option(None, help="Uniform L* or 'minimal'"),
    output_dir: Optional[Path] = OUTPUT,
):
    """Closed-form optimal plan on a star network."""
    _execute(lambda: _scenario(
        "star-fast", network, monitors=monitors, capacity=_capacity(capacity), output_dir=output_dir,
    ))


@app.command("evaluate")
def evaluate(
    network: Path = NETWORK,
    monitors: Optional[int] = typer.Option(None, "--monitors", "-m", help="Number of monitors"),
    plan: Optional[Path] = typer.Option(None, help="Plan JSON to evaluate instead of solving"),
    objective: str = typer.Option("both", help="QF, QMF or both"),
    mode: Optional[str] = MODE,
    output_dir: Optional[Path] = OUTPUT,
):
    """Report trace, QFIM inverse trace and QCRB of plans."""
    _execute(lambda: _scenario(
        "evaluate", network, monitors=monitors, plan=str(plan) if plan else None,
        objective=objective, mode=mode, output_dir=output_dir,
    ))


@app.command("mse-study")
def mse_study(
    network: Path = NETWORK,
    seed: int = typer.Option(..., help="Root seed (required)"),
    monitors: Optional[int] = typer.Option(None, "--monitors", "-m", help="Number of monitors"),
    plan: Optional[Path] = typer.Option(None, help="Plan JSON to simulate"),
    objective: str = typer.Option("QF", help="QF or QMF when solving"),
    n_grid: Optional[str] = typer.Option(None, "--n-grid", help="Comma-separated shot counts"),
    trials: Optional[int] = typer.Option(None, help="Trials per grid point"),
    workers: Optional[int] = typer.Option(None, help="Worker processes"),
    output_dir: Optional[Path] = OUTPUT,
):
    """Simulate a plan and compare empirical MSE with the QCRB."""
    _execute(lambda: _scenario(
        "mse-study", network, seed=seed, monitors=monitors, plan=str(plan) if plan else None,
        objective=objective, n_grid=_n_grid(n_grid), trials=trials, workers=workers,
        output_dir=output_dir,
    ))


@app.command("sweep-monitors")
def sweep_monitors(
    network: Path = NETWORK,
    objective: str = typer.Option("both", help="QF, QMF or both"),
    max_monitors: Optional[int] = typer.Option(None, help="Largest m to solve"),
    mode: Optional[str] = MODE,
    semantics: str = SEMANTICS,
    output_dir: Optional[Path] = OUTPUT,
):
    """Solve for every m from 1 upward (QMF at its minimal L*)."""
    _execute(lambda: _scenario(
        "sweep-monitors", network, objective=objective, max_monitors=max_monitors,
        mode=mode, semantics=semantics, output_dir=output_dir,
    ))


@app.command("export-lp")
def export_lp_command(
    network: Path = NETWORK,
    monitors: int = typer.Option(..., "--monitors", "-m", help="Number of monitors"),
    objective: str = typer.Option("QF", help="QF or QMF"),
    capacity: Optional[str] = typer.Option(None, help="L*: integer, comma list, or 'minimal'"),
    mode: Optional[str] = MODE,
    semantics: str = SEMANTICS,
    output_dir: Optional[Path] = OUTPUT,
):
    """Write the placement program as a CPLEX LP file."""
    _execute(lambda: _scenario(
        "export-lp", network, monitors=monitors, objective=objective, capacity=_capacity(capacity),
        mode=mode, semantics=semantics, output_dir=output_dir,
    ))


@app.command("run")
def run(scenario: Path = typer.Argument(..., help="Scenario YAML file")):
    """Run a scenario file."""
    _execute(lambda: run_scenario(read_scenario(scenario)))


@app.command("plot-data")
def plot_data(bundle: Path = typer.Argument(..., help="Report bundle directory")):
    """Emit x/y/series CSV tables for a report bundle."""
    try:
        written = emit_plot_data(bundle)
    except Exception as e:
        _fail(e)
        return
    typer.secho(f"✓ Wrote {len(written)} plot tables", fg=typer.colors.GREEN)
    for path in written:
        typer.echo(f"  {path}")


@app.command("version")
def version():
    """Show version information."""
    typer.echo(f"Qtomo version {__version__}")


if __name__ == "__main__":
    app()
