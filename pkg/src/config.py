import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv

from .errors import ConfigError

load_dotenv()

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"


@dataclass(frozen=True)
class LabSettings:
    """Process-wide settings read from the environment (.env honoured)."""

    threads: int
    log_level: str
    output_dir: Path


def _read_threads(raw: Optional[str]) -> int:
    if raw is None or raw.strip() == "":
        return max(1, os.cpu_count() or 1)
    try:
        threads = int(raw)
    except ValueError:
        raise ConfigError(f"BCNLS_THREADS must be a positive integer, got {raw!r}")
    if threads < 1:
        raise ConfigError(f"BCNLS_THREADS must be a positive integer, got {threads}")
    return threads


def load_settings(environ: Optional[Dict[str, str]] = None) -> LabSettings:
    env = os.environ if environ is None else environ
    level = env.get("BCNLS_LOG_LEVEL", "INFO").upper()
    if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
        raise ConfigError(f"BCNLS_LOG_LEVEL {level!r} is not a logging level")
    return LabSettings(
        threads=_read_threads(env.get("BCNLS_THREADS")),
        log_level=level,
        output_dir=Path(env.get("BCNLS_OUTPUT_DIR", "runs")),
    )


def configure_logging(level: str = "INFO") -> None:
    root = logging.getLogger()
    if root.handlers:
        root.setLevel(level)
        return
    logging.basicConfig(level=level, format=LOG_FORMAT)


# --------- Parameter files --------- #

PARAM_KEYS = {"dimension", "components", "exponent", "coupling_matrix", "mu", "beta", "allow_out_of_range"}


def load_params_file(path: Path) -> Dict[str, Any]:
    """Read a JSON parameter file and return its mapping (keys checked, values not)."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"parameter file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"parameter file {path} is not valid JSON: {e}")
    if not isinstance(data, dict):
        raise ConfigError(f"parameter file {path} must hold a JSON object")
    unknown = set(data) - PARAM_KEYS
    if unknown:
        raise ConfigError(f"unknown keys in {path}: {sorted(unknown)}")
    logger.debug(f"📄 Loaded parameter file {path}")
    return data
