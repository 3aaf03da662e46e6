"""Main CLI entry point for linclt."""

import csv
import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table

from linclt import __version__
from linclt.cli.config import ConfigError, load_config, resolve_output_dir
from linclt.cli.experiments import ExperimentResult, run_experiment
from linclt.errors import (
    CertificationError,
    MissingCertificateError,
    PreconditionError,
    ReplicateError,
)
from linclt.innovations.bernoulli import MAP_LABELS
from linclt.innovations.counterexample import PSI_CATALOG

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_CERTIFICATION = 3

# Create Typer app
app = typer.Typer(
    name="linclt",
    help="Verification lab for the CLT of stationary linear processes.",
    add_completion=False,
)

# Create console for rich output
console = Console()

MODEL_CATALOG = [
    ("iid", "distribution: normal | rademacher | uniform (unit variance)"),
    ("mds-product", "h_knots, h_values: optional table for h; default h(z) = 1 + 0.5 tanh(z)"),
    (
        "causal-linear",
        "coefficients: table(table) | geometric(ratio) | counterexample(psi, cutoff)",
    ),
    ("bernoulli-shift", "map: {name, p, a}; bit_depth: 8..64 (default 64)"),
    ("nonergodic-scale", "scales, probabilities: finite mixture drawn once per path"),
]


@app.callback()
def callback(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Enable debug logging"),
) -> None:
    """linclt - check the central limit theorem for linear processes numerically."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )


def _write_json(path: Path, document: Dict[str, Any]) -> None:
    path.write_text(json.dumps(document, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _write_csv(path: Path, rows: List[Dict[str, float]]) -> None:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(rows[0].keys()), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def write_outputs(result: ExperimentResult, out_dir: Path, workers: int) -> List[Path]:
    """Write report.json, trace CSVs and metadata.json; return the paths written."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [out_dir / "report.json"]
    _write_json(written[0], result.report_document())
    for name, rows in sorted(result.traces.items()):
        if rows:
            path = out_dir / f"{name}.csv"
            _write_csv(path, rows)
            written.append(path)
    if result.replicate_values is not None:
        path = out_dir / "replicates.csv"
        _write_csv(path, [{"value": v} for v in result.replicate_values])
        written.append(path)
    metadata = out_dir / "metadata.json"
    _write_json(
        metadata,
        {
            "finished_at": datetime.now(timezone.utc).isoformat(),
            "runtime_ms": result.runtime_ms,
            "version": __version__,
            "workers": workers,
        },
    )
    written.append(metadata)
    return written


@app.command()
def run(
    config_path: Path = typer.Argument(..., help="Path to the experiment JSON file"),
    workers: int = typer.Option(1, "--workers", "-w", min=1, help="Replicate worker threads"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output directory"),
    seed: Optional[int] = typer.Option(None, "--seed", "-s", help="Override the master seed"),
) -> None:
    """Run the experiment described by a configuration file."""
    try:
        config = load_config(config_path)
    except ConfigError as e:
        console.print(f"❌ {e}", style="bold red")
        raise typer.Exit(code=EXIT_CONFIG)
    if seed is not None:
        config = config.model_copy(update={"seed": seed})

    console.print(Panel(f"Running {config.experiment} experiment {config.name!r}", title="linclt"))
    try:
        with console.status("Computing..."):
            result = run_experiment(config, workers)
    except PreconditionError as e:
        console.print(f"❌ Invalid input: {e}", style="bold red")
        raise typer.Exit(code=EXIT_CONFIG)
    except (CertificationError, MissingCertificateError, ReplicateError) as e:
        console.print(f"❌ Certification failure: {e}", style="bold red")
        raise typer.Exit(code=EXIT_CERTIFICATION)

    for check in result.checks:
        mark = "✅" if check.passed else "❌"
        console.print(f"{mark} {check.name}: {check.detail}")

    out_dir = resolve_output_dir(config, out)
    for path in write_outputs(result, out_dir, workers):
        console.print(f"Wrote [bold]{path}[/bold]")

    if not result.passed:
        raise typer.Exit(code=EXIT_CHECK_FAILED)


@app.command("list-models")
def list_models() -> None:
    """List the innovation models, Bernoulli-shift maps and psi sequences."""
    table = Table(title="Innovation models")
    table.add_column("Kind", style="cyan")
    table.add_column("Parameters", style="green")
    for kind, params in MODEL_CATALOG:
        table.add_row(kind, params)
    console.print(table)

    maps = Table(title="Bernoulli-shift maps")
    maps.add_column("Name", style="cyan")
    maps.add_column("g(x)", style="yellow")
    for name, label in MAP_LABELS.items():
        maps.add_row(name, escape(label))
    console.print(maps)

    psis = Table(title="Counterexample psi sequences")
    psis.add_column("Name", style="cyan")
    psis.add_column("psi_n", style="yellow")
    for name, (label, _) in PSI_CATALOG.items():
        psis.add_row(name, escape(label))
    console.print(psis)


if __name__ == "__main__":
    app()
