# Copyright Fracsense Authors 2026
import logging

logger = logging.getLogger("fracsense-utils")
