# Copyright Fracsense Authors 2026
import typer

from fracsense.cli import run

from .config import config_cli


def version_callback(value: bool):
    if value:
        from fracsense_version import __version__

        typer.echo(f"fracsense version: {__version__}")
        raise typer.Exit()


entrypoint_cli_typer = typer.Typer(
    no_args_is_help=True,
    add_completion=False,
    rich_markup_mode="markdown",
    help="""
    Fracture sensing from elastic far-field data.

    Synthesize multistatic scattering data for a fracture with a linear-slip interface, image it,
    and recover its opening displacement and specific stiffness.
    """,
)


@entrypoint_cli_typer.callback()
def fracsense(
    ctx: typer.Context,
    version: bool = typer.Option(None, "--version", callback=version_callback),
):
    pass


entrypoint_cli_typer.add_typer(config_cli)

entrypoint_cli_typer.command("synth")(run.synth)
entrypoint_cli_typer.command("glsm")(run.glsm)
entrypoint_cli_typer.command("fod")(run.fod)
entrypoint_cli_typer.command("stiffness")(run.stiffness)
entrypoint_cli_typer.command("pipeline")(run.run_pipeline)
entrypoint_cli_typer.command("validate")(run.validate)

entrypoint_cli = typer.main.get_command(entrypoint_cli_typer)

if __name__ == "__main__":
    # this module is only called from tests, otherwise the parent package __init__.py is used as the entrypoint
    entrypoint_cli()
