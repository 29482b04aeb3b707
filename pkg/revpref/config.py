"""
Configuration Module
====================

Centralizes paths, numerical defaults, environment handling and logging
setup for the revpref toolkit.

Design decisions:
    - Paths are resolved relative to the project root so the CLI works
      regardless of the working directory at invocation time.
    - Output and cache directories are created by the code that writes to
      them, not on import, so that importing the library has no side effects
      on disk.
    - Logging is configured once via ``setup_logging()``.  All downstream
      modules import their loggers with ``logging.getLogger(__name__)`` and
      inherit this configuration.
"""

import logging
import os
from pathlib import Path

# ---------------------------------------------------------------------------
# Load .env from project root (REVPREF_THREADS, REVPREF_LOG_LEVEL, ...)
# ---------------------------------------------------------------------------

_project_root = Path(__file__).resolve().parent.parent
_env_file = _project_root / ".env"
if _env_file.exists():
    try:
        from dotenv import load_dotenv
        load_dotenv(_env_file)
    except ImportError:
        pass  # python-dotenv not installed; rely on system env only

# ---------------------------------------------------------------------------
# Path configuration
# ---------------------------------------------------------------------------

# <project_root>/revpref/config.py  →  <project_root>
PROJECT_ROOT: Path = _project_root

# Reports written by the CLI when ``--out`` is not given.
OUTPUT_DIR: Path = PROJECT_ROOT / "data" / "output"

# Cached patch layouts and type matrices (see ingestion/registry.py).
CACHE_DIR: Path = PROJECT_ROOT / "data" / "cache"

# Shipped JSON schema for CLI reports.
REPORT_SCHEMA_PATH: Path = PROJECT_ROOT / "docs" / "report_schema.json"

# ---------------------------------------------------------------------------
# Numerical defaults
# ---------------------------------------------------------------------------

# Absolute tolerance on expenditure comparisons (p·x vs p·y).
COMPARISON_TOL: float = 1e-9

# Minimum certified slack for a sign region to count as a patch.
SLACK_THRESHOLD: float = 1e-7

# |p'·x̆ − 1| at or below this puts a choice on a budget boundary.
BOUNDARY_TOL: float = 1e-9

# Normalized price vectors closer than this are the same budget.
DUPLICATE_BUDGET_TOL: float = 1e-9

# Hard cap on the number of rational types (columns of A).
TYPE_CAP: int = 10**7

# Prefix expansions allowed for the simple-path strict closure of a
# relation that contains a violating cycle.
SIMPLE_PATH_BUDGET: int = 200_000

# Floor on the Afriat multipliers.
AFRIAT_LAMBDA_FLOOR: float = 1.0

DEFAULT_REPLICATIONS: int = 1000
DEFAULT_ALPHA: float = 0.05
DEFAULT_GRID_STEP: float = 0.01
DEFAULT_SEED: int = 20240101

# ---------------------------------------------------------------------------
# Threads
# ---------------------------------------------------------------------------

THREADS_ENV_VAR: str = "REVPREF_THREADS"


def resolve_threads(cli_value: int | None = None) -> int:
    """Return the worker count for parallel stages.

    Precedence: explicit ``--threads`` value, then ``REVPREF_THREADS``,
    then a single worker.

    Raises
    ------
    ValueError
        If the resolved value is not a positive integer.
    """
    if cli_value is not None:
        threads = cli_value
    else:
        raw = os.environ.get(THREADS_ENV_VAR)
        if raw is None or not raw.strip():
            return 1
        try:
            threads = int(raw)
        except ValueError as exc:
            raise ValueError(
                f"{THREADS_ENV_VAR} must be an integer, got {raw!r}"
            ) from exc
    if threads < 1:
        raise ValueError(f"Thread count must be >= 1, got {threads}")
    return threads


# ---------------------------------------------------------------------------
# Logging configuration
# ---------------------------------------------------------------------------

LOG_FORMAT: str = "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"
LOG_DATE_FORMAT: str = "%Y-%m-%d %H:%M:%S"
LOG_LEVEL: int = logging.INFO


def setup_logging(level: int | str | None = None) -> None:
    """Configure the root logger for the whole toolkit.

    Call this once at application startup (``main.py``).  All modules that
    use ``logging.getLogger(__name__)`` inherit this configuration.

    The handler writes to *stderr* so the CLI's JSON report on stdout stays
    machine-readable.

    Parameters
    ----------
    level : int or str, optional
        Overrides ``REVPREF_LOG_LEVEL`` and the INFO default.
    """
    root_logger = logging.getLogger()

    # Avoid adding duplicate handlers if called more than once.
    if not root_logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=LOG_DATE_FORMAT))
        root_logger.addHandler(handler)

    if level is None:
        level = os.environ.get("REVPREF_LOG_LEVEL", LOG_LEVEL)
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = LOG_LEVEL
    root_logger.setLevel(level)
