"""
Logging configuration.

Sets up line-oriented logging on stdout shared by the CLI and library code.
"""

import logging
import sys

from services.gesture_adaptation.utils.config import settings


def setup_logging(level: str | None = None) -> None:
    """Configure root logging."""
    logging.basicConfig(
        level=getattr(logging, (level or settings.LOG_LEVEL).upper()),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[logging.StreamHandler(sys.stdout)],
        force=True,
    )
