# Copyright Fracsense Authors 2026
from pathlib import Path
from typing import List, Optional

import typer
from rich.console import Console
from rich.table import Table

from fracsense import pipeline
from fracsense.validation import run_checks

from .utils import (
    CONFIG_OPTION,
    NOISE_OPTION,
    ORACLE_OPTION,
    OUT_OPTION,
    PRESET_OPTION,
    SEED_OPTION,
    THREADS_OPTION,
    apply_threads,
    display_metrics,
    reported_errors,
    resolve_config,
)


def synth(
    preset: str = PRESET_OPTION,
    config: Optional[Path] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    out: Path = OUT_OPTION,
    noise: Optional[float] = NOISE_OPTION,
    threads: Optional[int] = THREADS_OPTION,
):
    """Solve the forward problem for every excitation and write the noisy far-field data."""
    cfg = resolve_config(preset, config, seed, noise, None, threads)
    with reported_errors():
        result = pipeline.synth_stage(cfg, out)
    display_metrics(f"synth: {cfg.name}", {"synth": result.metrics(cfg)})


def glsm(
    preset: str = PRESET_OPTION,
    config: Optional[Path] = CONFIG_OPTION,
    out: Path = OUT_OPTION,
    noise: Optional[float] = NOISE_OPTION,
    threads: Optional[int] = THREADS_OPTION,
):
    """Image the fracture from the far-field data and fit the reconstructed surface."""
    cfg = resolve_config(preset, config, None, noise, None, threads)
    with reported_errors():
        result = pipeline.glsm_stage(cfg, out)
    display_metrics(f"glsm: {cfg.name}", {"glsm": result.metrics(cfg)})


def fod(
    preset: str = PRESET_OPTION,
    config: Optional[Path] = CONFIG_OPTION,
    out: Path = OUT_OPTION,
    noise: Optional[float] = NOISE_OPTION,
    geometry_oracle: Optional[bool] = ORACLE_OPTION,
    threads: Optional[int] = THREADS_OPTION,
):
    """Recover the fracture opening displacement on the reconstructed (or true) surface."""
    cfg = resolve_config(preset, config, None, noise, geometry_oracle, threads)
    with reported_errors():
        result = pipeline.fod_stage(cfg, out)
    display_metrics(f"fod: {cfg.name}", {"fod": result.metrics()})


def stiffness(
    preset: str = PRESET_OPTION,
    config: Optional[Path] = CONFIG_OPTION,
    out: Path = OUT_OPTION,
    noise: Optional[float] = NOISE_OPTION,
    geometry_oracle: Optional[bool] = ORACLE_OPTION,
    threads: Optional[int] = THREADS_OPTION,
):
    """Recover the specific stiffness from the FOD and write the report."""
    cfg = resolve_config(preset, config, None, noise, geometry_oracle, threads)
    with reported_errors():
        result = pipeline.stiffness_stage(cfg, out)
    display_metrics(f"stiffness: {cfg.name}", {"stiffness": result.metrics()})


def run_pipeline(
    preset: str = PRESET_OPTION,
    config: Optional[Path] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    out: Path = OUT_OPTION,
    noise: Optional[float] = NOISE_OPTION,
    geometry_oracle: Optional[bool] = ORACLE_OPTION,
    threads: Optional[int] = THREADS_OPTION,
):
    """Run synth, glsm, fod and stiffness in one process."""
    cfg = resolve_config(preset, config, seed, noise, geometry_oracle, threads)
    with reported_errors():
        result = pipeline.full_pipeline(cfg, out)
    display_metrics(f"pipeline: {cfg.name}", result.report)
    Console().print(f"Artifacts written to {out}")


def validate(
    skip_slow: bool = typer.Option(False, "--skip-slow", help="Only run the checks that take seconds."),
    criterion: Optional[List[int]] = typer.Option(None, "--criterion", help="Run only these criteria."),
    threads: Optional[int] = THREADS_OPTION,
):
    """Run the acceptance checks and report pass/fail per criterion."""
    apply_threads(threads)
    results = run_checks(skip_slow=skip_slow, only=criterion or None)
    table = Table(title="Acceptance checks")
    table.add_column("#", justify="right")
    table.add_column("Criterion")
    table.add_column("Status")
    table.add_column("Detail")
    table.add_column("Seconds", justify="right")
    styles = {"pass": "green", "fail": "red", "skipped": "yellow"}
    for r in results:
        table.add_row(
            str(r.criterion), r.name, f"[{styles[r.status]}]{r.status}[/]", r.detail, f"{r.seconds:.1f}"
        )
    Console().print(table)
    if any(r.status == "fail" for r in results):
        raise typer.Exit(code=1)
