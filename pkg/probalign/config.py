import os
from typing import Optional

from dotenv import load_dotenv

from .exceptions import UsageError

load_dotenv()


def _optional_float(name: str) -> Optional[float]:
    value = os.getenv(name, "").strip()
    return float(value) if value else None


class Settings:
    """Process-wide defaults, read from the environment (and `.env`) on construction."""

    def __init__(self):
        # Search budgets
        self.MAX_EXPANSIONS = int(os.getenv("PROBALIGN_MAX_EXPANSIONS", "5000000"))
        self.TIMEOUT_S = _optional_float("PROBALIGN_TIMEOUT_S")

        # Log ingestion
        self.SUM_TOLERANCE = float(os.getenv("PROBALIGN_SUM_TOLERANCE", "1e-9"))

        # Output
        self.OUT_DIR = os.getenv("PROBALIGN_OUT_DIR", "out")
        self.LOG_LEVEL = os.getenv("PROBALIGN_LOG_LEVEL", "INFO").upper()

        # Experiments
        self.SEED = int(os.getenv("PROBALIGN_SEED", "42"))

    PROJECT_NAME = "probalign"
    VERSION = "1.0.0"

    # ε is accepted only inside this band; see CostFunction
    EPSILON_MIN = 1e-6
    EPSILON_MAX = 1 - 1e-6


settings = Settings()


def resolve_workers(flag: Optional[int] = None) -> int:
    """--workers wins, then PROBALIGN_THREADS, then available parallelism."""
    if flag is not None:
        workers = flag
    else:
        threads = os.getenv("PROBALIGN_THREADS", "").strip()
        try:
            workers = int(threads) if threads else (os.cpu_count() or 1)
        except ValueError:
            raise UsageError(f"PROBALIGN_THREADS must be an integer, got {threads!r}")
    if workers < 1:
        raise UsageError(f"worker count must be >= 1, got {workers}")
    return workers
