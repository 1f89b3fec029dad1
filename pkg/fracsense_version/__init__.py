# Copyright Fracsense Authors 2026
"""Specifies the `fracsense.__version__` number for the package."""

from ._version_generated import build_number  # Written by `inv update-build-number`

major_number = 0

# Bump this manually on any change to artifact formats
minor_number = 3

__version__ = f"{major_number}.{minor_number}.{build_number}"
