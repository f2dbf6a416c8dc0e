"""
Gesture adaptation command-line entry point.

Generates synthetic two-domain datasets, trains and evaluates the adversarial
gesture network, and runs the ablation and λ-sweep experiments.
"""

import json
from pathlib import Path
from typing import Any, NoReturn

import torch
import typer
from rich.console import Console
from rich.progress import Progress, SpinnerColumn, TextColumn
from rich.table import Table

from services.gesture_adaptation import __version__
from services.gesture_adaptation.models.configs import DatasetSource, ExperimentConfig, Method
from services.gesture_adaptation.models.report import METRIC_NAMES, MetricsReport
from services.gesture_adaptation.models.segment import Domain
from services.gesture_adaptation.synth.presets import preset_names
from services.gesture_adaptation.utils.config import settings
from services.gesture_adaptation.utils.logging import setup_logging
from services.gesture_adaptation.workflow.experiment import (
    DEFAULT_LAMBDAS,
    cmd_ablate,
    cmd_evaluate,
    cmd_export_mdok,
    cmd_generate,
    cmd_sweep_lambda,
    cmd_train,
    load_experiment_config,
)

app = typer.Typer(help="Sim-to-real gesture adaptation - train, evaluate and ablate")
console = Console()


@app.callback()
def configure(
    log_level: str = typer.Option(None, "--log-level", help="Overrides GESTURE_DA_LOG_LEVEL"),
) -> None:
    """Shared setup for every command."""
    setup_logging(log_level)
    if settings.TORCH_THREADS:
        torch.set_num_threads(settings.TORCH_THREADS)


def _overrides(
    method: Method | None = None,
    epochs: int | None = None,
    folds: list[int] | None = None,
    seeds: list[int] | None = None,
    preset_name: str | None = None,
    tables_dir: Path | None = None,
    extra: list[str] | None = None,
) -> dict[str, Any]:
    overrides: dict[str, Any] = {}
    if method is not None:
        overrides["method"] = method.value
    if epochs is not None:
        overrides["train.epochs"] = epochs
    if folds:
        overrides["folds"] = folds
    if seeds:
        overrides["seeds"] = seeds
    if preset_name is not None:
        overrides["dataset.kind"] = "synthetic"
        overrides["dataset.preset"] = preset_name
    if tables_dir is not None:
        overrides["dataset.kind"] = "tables"
        overrides["dataset.tables_dir"] = str(tables_dir)
    for item in extra or []:
        key, separator, raw = item.partition("=")
        if not separator:
            raise typer.BadParameter(f"override '{item}' is not KEY=VALUE")
        try:
            overrides[key] = json.loads(raw)
        except json.JSONDecodeError:
            overrides[key] = raw
    return overrides


def _fail(error: Exception) -> NoReturn:
    console.print(f"\n[bold red]✗ Error: {error}[/bold red]")
    for note in getattr(error, "__notes__", []):
        console.print(f"  [red]{note}[/red]")
    raise typer.Exit(1)


def _print_report(title: str, report: MetricsReport) -> None:
    table = Table(title=title)
    table.add_column("metric")
    table.add_column("mean±std (%)", justify="right")
    for name, value in report.summary().items():
        table.add_row(name, value)
    console.print(table)


def _progress() -> Progress:
    return Progress(
        SpinnerColumn(), TextColumn("[progress.description]{task.description}"), console=console
    )


ConfigOption = typer.Option(None, "--config", "-c", help="Experiment config JSON")
SetOption = typer.Option(None, "--set", help="Config override KEY=VALUE, dotted keys allowed")


@app.command()
def generate(
    out_dir: Path = typer.Argument(..., help="Directory to write the dataset into"),
    preset_name: str = typer.Option(
        "combined", "--preset", "-p", help=f"One of: {', '.join(preset_names())}"
    ),
    n_trials: int = typer.Option(settings.SYNTH_TRIALS, "--trials", "-n", help="Trials per domain"),
    seed: int = typer.Option(0, "--seed", help="Generation seed"),
    visual_dim: int = typer.Option(settings.SYNTH_VISUAL_DIM, "--visual-dim", help="Visual feature width"),
) -> None:
    """Generate a paired simulator/real synthetic dataset."""
    try:
        result = cmd_generate(preset_name, n_trials, seed, out_dir, visual_dim)
    except Exception as e:
        _fail(e)
    console.print(f"[bold green]✓ Dataset written to {result.out_dir}[/bold green]")
    console.print(f"Segments: {result.simulator_segments} simulator / {result.real_segments} real")
    console.print(f"Config hash: {result.config_hash}")


@app.command()
def train(
    config: Path = ConfigOption,
    method: Method = typer.Option(None, "--method", "-m", help="Method to train"),
    epochs: int = typer.Option(None, "--epochs", help="Override train.epochs"),
    fold: list[int] = typer.Option(None, "--fold", help="Fold index to run; repeatable"),
    seed: list[int] = typer.Option(None, "--seed", help="Seed to run; repeatable"),
    preset_name: str = typer.Option(None, "--preset", help="Synthetic dataset preset"),
    tables_dir: Path = typer.Option(
        None, "--tables", help="Dataset directory with simulator/ and real/ tables"
    ),
    output_dir: Path = typer.Option(None, "--out", "-o", help="Run output directory"),
    overrides: list[str] = SetOption,
) -> None:
    """Train and evaluate one method over the selected folds and seeds."""
    try:
        experiment = load_experiment_config(
            config, _overrides(method, epochs, fold, seed, preset_name, tables_dir, overrides)
        )
        with _progress() as progress:
            task = progress.add_task("Starting...", total=None)
            summary = cmd_train(experiment, output_dir, progress, task)
    except Exception as e:
        _fail(e)
    console.print(f"[bold green]✓ {summary.method.value}: {len(summary.runs)} runs[/bold green]")
    _print_report(f"{summary.method.value} on real test trials", summary.real_report)
    _print_report(f"{summary.method.value} on simulator test trials", summary.simulator_report)
    console.print(f"Artifacts: {summary.output_dir} (config {summary.config_hash})")


@app.command()
def evaluate(
    checkpoints: list[Path] = typer.Argument(..., help="Checkpoint files, e.g. one per seed"),
    domain: str = typer.Option("real", "--domain", "-d", help="simulator or real"),
    subset: str = typer.Option("test", "--subset", help="test or train trials of the checkpoint's fold"),
    preset_name: str = typer.Option(None, "--preset", help="Evaluate on a synthetic preset instead"),
    tables_dir: Path = typer.Option(None, "--tables", help="Evaluate on a table dataset instead"),
    output_dir: Path = typer.Option(None, "--out", "-o", help="Directory for the report"),
) -> None:
    """Evaluate checkpoints and aggregate their reports."""
    try:
        domains = {"simulator": Domain.SIMULATOR, "real": Domain.REAL}
        if domain not in domains:
            raise ValueError(f"domain must be simulator or real, got '{domain}'")
        if subset not in ("test", "train"):
            raise ValueError(f"subset must be test or train, got '{subset}'")
        source = None
        if tables_dir is not None:
            source = DatasetSource(kind="tables", tables_dir=str(tables_dir))
        elif preset_name is not None:
            source = DatasetSource(kind="synthetic", preset=preset_name)
        report = cmd_evaluate(
            checkpoints, source, domains[domain], subset, output_dir  # type: ignore[arg-type]
        )
    except Exception as e:
        _fail(e)
    _print_report(f"{domain} {subset} trials", report)


@app.command()
def ablate(
    config: Path = ConfigOption,
    include_separate_visual: bool = typer.Option(
        False, "--include-separate-visual", help="Also run separate per-modality visual alignment"
    ),
    epochs: int = typer.Option(None, "--epochs", help="Override train.epochs"),
    preset_name: str = typer.Option(None, "--preset", help="Synthetic dataset preset"),
    output_dir: Path = typer.Option(None, "--out", "-o", help="Run output directory"),
    overrides: list[str] = SetOption,
) -> None:
    """Compare all methods against the position baseline."""
    try:
        experiment = load_experiment_config(
            config, _overrides(None, epochs, None, None, preset_name, None, overrides)
        )
        with _progress() as progress:
            task = progress.add_task("Starting...", total=None)
            table = cmd_ablate(experiment, include_separate_visual, output_dir, progress, task)
    except Exception as e:
        _fail(e)
    view = Table(title="Real-domain test accuracy")
    for column in ("method", "ACC (%)", "F1 (%)", "ACC gain", "F1 gain"):
        view.add_column(column, justify="left" if column == "method" else "right")
    for row in table.to_dict("records"):
        view.add_row(
            row["method"],
            f"{100 * row['accuracy_mean']:.2f}±{100 * row['accuracy_std']:.2f}",
            f"{100 * row['f1_mean']:.2f}±{100 * row['f1_std']:.2f}",
            f"{100 * row['acc_gain']:+.2f}",
            f"{100 * row['f1_gain']:+.2f}",
        )
    console.print(view)


@app.command("sweep-lambda")
def sweep_lambda(
    config: Path = ConfigOption,
    values: list[float] = typer.Option(None, "--value", "-v", help="λ value; repeatable"),
    epochs: int = typer.Option(None, "--epochs", help="Override train.epochs"),
    preset_name: str = typer.Option(None, "--preset", help="Synthetic dataset preset"),
    output_dir: Path = typer.Option(None, "--out", "-o", help="Run output directory"),
    overrides: list[str] = SetOption,
) -> None:
    """Retrain for each λ and tabulate real-domain accuracy."""
    try:
        experiment: ExperimentConfig = load_experiment_config(
            config, _overrides(None, epochs, None, None, preset_name, None, overrides)
        )
        with _progress() as progress:
            task = progress.add_task("Starting...", total=None)
            lambdas = values or list(DEFAULT_LAMBDAS)
            table = cmd_sweep_lambda(experiment, lambdas, output_dir, progress, task)
    except Exception as e:
        _fail(e)
    view = Table(title=f"λ sweep ({experiment.method.value})")
    view.add_column("λ", justify="right")
    view.add_column("ACC (%)", justify="right")
    for row in table.to_dict("records"):
        view.add_row(f"{row['lambda']:g}", f"{100 * row['acc_mean']:.2f}±{100 * row['acc_std']:.2f}")
    console.print(view)


@app.command("export-mdok")
def export_mdok(
    out: Path = typer.Argument(..., help="CSV file to write"),
    preset_name: str = typer.Option("combined", "--preset", help="Synthetic dataset preset"),
    tables_dir: Path = typer.Option(None, "--tables", help="Export a table dataset instead"),
    seed: int = typer.Option(0, "--seed", help="Generation seed for synthetic data"),
) -> None:
    """Export direction-oriented kinematic frames of a dataset."""
    try:
        if tables_dir is not None:
            source = DatasetSource(kind="tables", tables_dir=str(tables_dir))
        else:
            source = DatasetSource(kind="synthetic", preset=preset_name, seed=seed)
        path = cmd_export_mdok(source, out)
    except Exception as e:
        _fail(e)
    console.print(f"[bold green]✓ Exported to {path}[/bold green]")


@app.command()
def version() -> None:
    """Show version and active settings."""
    console.print("[bold]Gesture Adaptation[/bold]")
    console.print(f"Version: {__version__}")
    console.print(f"Output root: {settings.OUTPUT_ROOT}")
    console.print(
        f"Desk scale: batch {settings.DESK_BATCH_PER_DOMAIN}/domain, hidden {settings.DESK_HIDDEN_DIM}, "
        f"{settings.DESK_EPOCHS} epochs"
    )
    console.print(f"Metrics: {', '.join(METRIC_NAMES)}")


def main() -> None:
    """Main entry point."""
    app()


if __name__ == "__main__":
    main()
