"""
Command-line entry point: `chaoskit <subcommand> --config <path>`.
"""

import logging
from pathlib import Path
from typing import Optional

import numpy as np
import typer
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from chaoskit import __version__
from chaoskit.config import get_settings
from chaoskit.core.exceptions import (
    BlowUpError, ConfigValidationError, DivergenceError, DomainError, ModelLoadError,
    NumericError, SeriesConvergenceError,
)
from chaoskit.schemas.experiment import ExperimentConfig
from chaoskit.schemas.simulation import SimulationDocument
from chaoskit.services.analysis_service import second_moment_curve
from chaoskit.services.model_service import load_model
from chaoskit.services.run_service import (
    field_message, execute, output_dir, parse_config, read_document, resolve_model, run,
)
from chaoskit.services.sde_service import simulate_particle_system
from chaoskit.utils.helpers import file_digest, write_csv, write_json

logger = logging.getLogger(__name__)

app = typer.Typer(help="Mean-field particle systems laboratory", no_args_is_help=True)
console = Console()

USAGE_ERRORS = (ConfigValidationError, ModelLoadError, DomainError)
NUMERIC_ERRORS = (NumericError, BlowUpError, DivergenceError, SeriesConvergenceError)

ConfigOption = typer.Option(..., "--config", "-c", exists=False, help="JSON config document")
SeedOption = typer.Option(None, "--seed", min=0, max=2**64 - 1, help="Master seed (overrides the config)")
OutOption = typer.Option(None, "--out", help="Output directory (overrides the config)")
ThreadsOption = typer.Option(None, "--threads", min=1, help="Worker threads (default CHAOSKIT_THREADS or 1)")


@app.callback()
def main(verbose: bool = typer.Option(False, "--verbose", "-v", help="Log at DEBUG level")):
    logging.basicConfig(
        level="DEBUG" if verbose else get_settings()["LOG_LEVEL"],
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )


def _fail(exc: Exception) -> None:
    if isinstance(exc, USAGE_ERRORS):
        console.print(f"[red]error:[/red] {exc}")
        raise typer.Exit(code=2)
    if isinstance(exc, NUMERIC_ERRORS):
        console.print(f"[red]numeric failure:[/red] {exc}")
        raise typer.Exit(code=3)
    raise exc


def _print_summary(kind: str, report: dict, passed: Optional[bool], out_dir: Path) -> None:
    table = Table(title=f"chaoskit {kind}")
    table.add_column("quantity")
    table.add_column("value", justify="right")
    for key, value in sorted(report.items()):
        if isinstance(value, (int, float, bool, str)) or value is None:
            table.add_row(key, f"{value:.6g}" if isinstance(value, float) else str(value))
    verdict = "REPORT" if passed is None else ("PASS" if passed else "FAIL")
    table.add_row("verdict", verdict)
    console.print(table)
    console.print(f"Outputs written to {out_dir}")


def _run_kind(kind: Optional[str], config: Path, seed: Optional[int], out: Optional[Path], threads: Optional[int]) -> None:
    try:
        record = run(config, seed=seed, out=out, threads=threads, kind=kind)
    except (*USAGE_ERRORS, *NUMERIC_ERRORS) as e:
        _fail(e)
        return
    _print_summary(record.kind, record.summary, record.passed, output_dir(ExperimentConfig(**record.config)))


@app.command()
def constants(config: Path = ConfigOption, seed: Optional[int] = SeedOption, out: Optional[Path] = OutOption,
              threads: Optional[int] = ThreadsOption):
    """delta, c_E, lambda0, kappa0 and the theorem gates of a model."""
    try:
        cfg = parse_config(read_document(config), {"kind": "constants", "seed": seed,
                                                    "out": str(out) if out else None})
        model = resolve_model(cfg, config.parent)
        record, outcome = execute(cfg, model, output_dir(cfg), threads)
    except (*USAGE_ERRORS, *NUMERIC_ERRORS) as e:
        _fail(e)
        return
    table = Table(title="Contraction constants")
    table.add_column("quantity")
    table.add_column("value", justify="right")
    for key in ("delta", "c_E", "lambda0", "kappa0"):
        table.add_row(key, f"{outcome.report[key]:.10g}")
    for name, value in outcome.report["thresholds"].items():
        table.add_row(f"threshold {name}", f"{value:.10g}")
    for name, ok in outcome.report["gates"].items():
        table.add_row(f"gate {name}", "yes" if ok else "no")
    console.print(table)


@app.command()
def simulate(config: Path = ConfigOption, seed: Optional[int] = SeedOption, out: Optional[Path] = OutOption,
             threads: Optional[int] = ThreadsOption):
    """Simulate the N-particle system; writes the trajectory or its second moments."""
    try:
        document = read_document(config)
        try:
            doc = SimulationDocument(**document)
        except ValidationError as e:
            raise ConfigValidationError(field_message(e))
        if doc.model is None:
            raise ConfigValidationError("model: required for simulate")
        model_source = doc.model
        if isinstance(model_source, str) and not Path(model_source).is_absolute():
            model_source = str(config.parent / model_source)
        model = load_model(model_source)
        sim = doc.sim if seed is None else doc.sim.model_copy(update={"seed": seed})
        trajectory = simulate_particle_system(model, doc.init, sim, N=doc.N, threads=threads)
    except (*USAGE_ERRORS, *NUMERIC_ERRORS) as e:
        _fail(e)
        return
    out_dir = Path(out) if out else Path(get_settings()["OUTPUT_DIR"]) / f"simulate-{sim.seed}"
    if doc.output == "trajectory":
        header = ["t", "replica", "particle"] + [f"coord_{i}" for i in range(model.d)]
        K, M, N, _ = trajectory.states.shape
        rows = (
            [trajectory.times[k], r, i] + trajectory.states[k, r, i].tolist()
            for k in range(K) for r in range(M) for i in range(N)
        )
        path = write_csv(out_dir / "trajectory.csv", header, rows)
    else:
        times, mean, stderr = second_moment_curve(trajectory)
        path = write_csv(out_dir / "moments.csv", ["t", "mean_norm2", "stderr"], np.column_stack([times, mean, stderr]))
    write_json(out_dir / "run_record.json", {
        "kind": "simulate", "config": doc.model_dump(mode="json"), "version": __version__,
        "digests": {path.name: file_digest(path)},
    })
    console.print(f"Wrote {path}")


def _experiment_command(kind: str, doc: str):
    def command(config: Path = ConfigOption, seed: Optional[int] = SeedOption, out: Optional[Path] = OutOption,
                threads: Optional[int] = ThreadsOption):
        _run_kind(kind, config, seed, out, threads)
    command.__doc__ = doc
    app.command(name=kind)(command)


_experiment_command("couple", "Reflection coupling curve E f(|Z_t|) against exp(-lambda0 t).")
_experiment_command("poc", "Propagation of chaos in W_1 over the N list.")
_experiment_command("poc-eta", "Propagation of chaos in W_eta for eta < 1.")
_experiment_command("uniform-time", "Propagation of chaos with the no-growth check over time.")
_experiment_command("lln", "Quantitative law of large numbers for a built-in pair function.")
_experiment_command("gronwall", "Generalized Gronwall bound on a grid.")
_experiment_command("duhamel", "Monte Carlo check of the Duhamel identity.")
_experiment_command("moments", "Second moment of the particle system over time.")


@app.command(name="run")
def run_command(config: Path = ConfigOption, seed: Optional[int] = SeedOption, out: Optional[Path] = OutOption,
                threads: Optional[int] = ThreadsOption):
    """Run the experiment kind named in the config."""
    _run_kind(None, config, seed, out, threads)


if __name__ == "__main__":
    app()
