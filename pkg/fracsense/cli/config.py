# Copyright Fracsense Authors 2026
import typer

from fracsense.config import _SETTINGS, _store_user_config, config
from fracsense.experiment import PRESETS

config_cli = typer.Typer(
    name="config",
    help="""
    Manage numerics settings and inspect experiment presets.

    Settings are read from environment variables `FRACSENSE_<KEY>` first, then from
    `~/.fracsense.toml`.
    """,
    no_args_is_help=True,
)


@config_cli.command(help="Show current configuration values (debug command).")
def show():
    print(config)


@config_cli.command(help="Persist a setting in the user config file.")
def set(key: str, value: str):
    if key not in _SETTINGS:
        raise typer.BadParameter(f"Unknown setting '{key}'")
    _store_user_config({key: value})


@config_cli.command(help="Print an experiment preset as TOML, ready to edit and pass to --config.")
def preset(name: str = typer.Argument("zebra-mini")):
    if name not in PRESETS:
        raise typer.BadParameter(f"Unknown preset '{name}'. Must be one of {sorted(PRESETS)}")
    print(PRESETS[name].to_toml(), end="")
