"""JSON and CSV reports with a provenance block."""

import csv
import dataclasses
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np

from . import __version__
from .errors import ReportIOError
from .grid import grid_hash

logger = logging.getLogger(__name__)

TIMING_KEYS = {"timestamp", "processing_time", "elapsed"}


def to_jsonable(obj: Any, deterministic: bool = False) -> Any:
    """Plain JSON types; non-finite floats become null, timing keys drop in deterministic mode."""
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v, deterministic) for k, v in obj.items()
                if not (deterministic and k in TIMING_KEYS)}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v, deterministic) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist(), deterministic)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict(), deterministic)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    if obj is None or isinstance(obj, str):
        return obj
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(dataclasses.asdict(obj), deterministic)
    return str(obj)


def format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    return str(value)


def build_provenance(
    config_echo: Mapping[str, Any],
    grids: Sequence[Any] = (),
    seed: Optional[int] = None,
    chain: Sequence[Mapping[str, Any]] = (),
) -> Dict[str, Any]:
    return {
        "version": __version__,
        "config": dict(config_echo),
        "seed": seed,
        "grid_hashes": {g.signature(): grid_hash(g) for g in grids},
        "chain": list(chain),
    }


def write_csv(path: Path, rows: Iterable[Mapping[str, Any]], columns: Optional[List[str]] = None) -> Path:
    """One row per mapping; with no rows the file holds the header alone."""
    rows = list(rows)
    if columns is None:
        columns = list(rows[0]) if rows else []
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                w.writerow([format_cell(row.get(c)) for c in columns])
    except OSError as e:
        raise ReportIOError(f"cannot write CSV {path}: {e}")
    return path


def write_json(path: Path, payload: Mapping[str, Any], deterministic: bool = False) -> Path:
    path = Path(path)
    text = json.dumps(to_jsonable(payload, deterministic), ensure_ascii=False, indent=2, sort_keys=True)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n", encoding="utf-8")
    except OSError as e:
        raise ReportIOError(f"cannot write JSON {path}: {e}")
    return path


def emit_report(
    results: Mapping[str, Any],
    json_path: Optional[Path] = None,
    csv_path: Optional[Path] = None,
    config_echo: Optional[Mapping[str, Any]] = None,
    deterministic: bool = False,
    rows: Optional[Iterable[Mapping[str, Any]]] = None,
    columns: Optional[List[str]] = None,
    grids: Sequence[Any] = (),
    seed: Optional[int] = None,
    chain: Sequence[Mapping[str, Any]] = (),
) -> Dict[str, Any]:
    """Write `results` plus provenance as JSON and `rows` as CSV; returns the JSON payload."""
    payload = dict(results)
    payload["provenance"] = build_provenance(config_echo or {}, grids, seed, chain)
    payload = to_jsonable(payload, deterministic)
    if json_path is not None:
        write_json(json_path, payload, deterministic)
        logger.info(f"📄 Report written to {json_path}")
    if csv_path is not None:
        write_csv(csv_path, rows or [], columns)
        logger.info(f"📄 Series written to {csv_path}")
    return payload
