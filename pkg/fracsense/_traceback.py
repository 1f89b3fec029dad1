# Copyright Fracsense Authors 2026
from rich.traceback import install


def setup_rich_traceback() -> None:
    """Render uncaught errors with rich, hiding numpy/scipy internals."""
    import numpy
    import scipy

    import fracsense_utils

    install(suppress=[numpy, scipy, fracsense_utils], extra_lines=1)
