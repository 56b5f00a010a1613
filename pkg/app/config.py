import os
import logging
from dotenv import load_dotenv

load_dotenv(override=True)

# Worker count for pairwise sums, test families and suite checks
WORKER_COUNT = max(1, int(os.getenv("TOOLKIT_WORKERS", "1")))

CONSTANTS_PATH = os.getenv("TOOLKIT_CONSTANTS_PATH", "calibration.json")

LOG_LEVEL = os.getenv("TOOLKIT_LOG_LEVEL", "WARNING")

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str | None = None) -> None:
    """Install one stream handler on the package logger. Safe to call twice."""
    logger = logging.getLogger("app")
    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(handler)
    logger.setLevel((level or LOG_LEVEL).upper())
