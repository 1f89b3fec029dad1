# Copyright Fracsense Authors 2026
import contextlib
import os
from pathlib import Path
from typing import Any, Dict, NoReturn, Optional

import typer
from rich.console import Console
from rich.table import Table

from fracsense.exception import Error, StageError
from fracsense.experiment import ExperimentConfig, get_preset, load_experiment

PRESET_OPTION = typer.Option(
    "zebra-mini", "--preset", help="Named experiment: zebra, zebra-mini, cheetah, cheetah-mini."
)
CONFIG_OPTION = typer.Option(None, "--config", help="TOML experiment config applied on top of the preset.")
SEED_OPTION = typer.Option(None, "--seed", help="Noise seed.")
OUT_OPTION = typer.Option(Path("fracsense-out"), "--out", help="Directory for the artifacts.")
NOISE_OPTION = typer.Option(None, "--noise", help="Relative noise level on the far-field data.")
ORACLE_OPTION = typer.Option(
    None, "--geometry-oracle/--reconstructed-geometry", help="Use the true fracture in place of the imaged one."
)
THREADS_OPTION = typer.Option(None, "--threads", help="Worker threads (0 picks one per core).")

# click conventions: 2 for bad invocations, 1 for runs that fail
USAGE_EXIT_CODE = 2
FAILURE_EXIT_CODE = 1


def fail(message: str, code: int) -> NoReturn:
    """Print `message` to stderr as plain text (stage tags like ``[fod]`` are not markup) and exit."""
    typer.echo(f"Error: {message}", err=True)
    raise typer.Exit(code=code)


def apply_threads(threads: Optional[int]):
    if threads is not None:
        # settings are looked up on every use, so the environment reaches the worker pools
        os.environ["FRACSENSE_THREADS"] = str(threads)


def resolve_config(
    preset: str,
    config_path: Optional[Path],
    seed: Optional[int],
    noise: Optional[float],
    geometry_oracle: Optional[bool],
    threads: Optional[int],
) -> ExperimentConfig:
    apply_threads(threads)
    try:
        cfg = get_preset(preset)
        if config_path is not None:
            cfg = load_experiment(config_path, base=cfg)
        return cfg.with_overrides(seed=seed, noise=noise, geometry_oracle=geometry_oracle)
    except Error as exc:
        fail(str(exc), USAGE_EXIT_CODE)


@contextlib.contextmanager
def reported_errors():
    """Turn library errors into an error message and exit code 1, keeping the stage tag."""
    try:
        yield
    except StageError as exc:
        fail(str(exc), FAILURE_EXIT_CODE)
    except Error as exc:
        fail(f"{type(exc).__name__}: {exc}", FAILURE_EXIT_CODE)


def display_metrics(title: str, sections: Dict[str, Dict[str, Any]]):
    table = Table(title=title)
    table.add_column("Stage")
    table.add_column("Metric")
    table.add_column("Value", justify="right")
    for section, values in sections.items():
        if section == "artifacts":
            continue
        for key, value in values.items():
            shown = f"{value:.4g}" if isinstance(value, float) else str(value)
            table.add_row(section, key, shown)
    Console().print(table)
