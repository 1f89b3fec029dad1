# Copyright Fracsense Authors 2026
from .cli.entry_point import entrypoint_cli


def main():
    entrypoint_cli()


if __name__ == "__main__":
    entrypoint_cli()
