"""
JSON result cache and sweep CSV files
Cache entries are keyed by a content hash of the config subset they depend on
"""

import csv
import hashlib
import json
import logging
import math
import threading
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

from models import KeyRateReport
from utils.errors import ConfigError

logger = logging.getLogger(__name__)

BASE_COLUMNS = ["loss_db", "rate_passive", "rate_active_limit", "combos_evaluated", "combos_cut"]
TAIL_COLUMNS = ["wall_time_s", "status"]


def content_key(kind: str, key_fields: Dict[str, Any]) -> str:
    """SHA-256 of the canonical JSON form of the key fields"""
    payload = json.dumps({"kind": kind, **key_fields}, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ResultCache:
    """
    Thread-safe JSON cache for transition matrices and yield tensors

    A read-only cache serves hits but never writes, so worker processes can
    share a directory the parent filled.
    """

    def __init__(self, cache_dir: str = "data/cache", read_only: bool = False):
        self.cache_dir = Path(cache_dir)
        self.read_only = read_only
        if not read_only:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _file_for(self, kind: str) -> Path:
        return self.cache_dir / f"{kind}.json"

    def _read_json(self, file_path: Path) -> Dict[str, Any]:
        """Read a cache file, treating missing or corrupt files as empty"""
        try:
            with open(file_path, "r", encoding="utf-8") as f:
                data = json.load(f)
            return data if isinstance(data, dict) else {}
        except (json.JSONDecodeError, FileNotFoundError):
            return {}

    def _write_json(self, file_path: Path, data: Dict[str, Any]):
        """Write JSON file with pretty formatting"""
        with open(file_path, "w", encoding="utf-8") as f:
            json.dump(data, f, indent=2, ensure_ascii=False)

    def get(self, kind: str, key_fields: Dict[str, Any]) -> Optional[Any]:
        return self._read_json(self._file_for(kind)).get(content_key(kind, key_fields))

    def put(self, kind: str, key_fields: Dict[str, Any], value: Any) -> None:
        if self.read_only:
            return
        with self._lock:
            file_path = self._file_for(kind)
            data = self._read_json(file_path)
            data[content_key(kind, key_fields)] = value
            self._write_json(file_path, data)

    def get_or_compute(self, kind: str, key_fields: Dict[str, Any], compute: Callable[[], Any]) -> Any:
        """
        Return the cached value or compute and store it

        Args:
            kind: Entry family (one file per family)
            key_fields: JSON-serialisable values the entry depends on
            compute: Produces a JSON-serialisable value on a miss

        Returns:
            The cached or freshly computed value
        """
        cached = self.get(kind, key_fields)
        if cached is not None:
            logger.debug("cache hit for %s", kind)
            return cached
        value = compute()
        self.put(kind, key_fields, value)
        return value

    def clear(self) -> None:
        with self._lock:
            for file_path in self.cache_dir.glob("*.json"):
                file_path.unlink()


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.17g}"


def sweep_columns(n_detectors: int) -> List[str]:
    return BASE_COLUMNS + [f"pr_omega_{j}" for j in range(n_detectors)] + TAIL_COLUMNS


def write_sweep_csv(path: str, reports: List[KeyRateReport]) -> Path:
    """
    Write one row per loss point in ascending loss order

    Numbers carry 17 significant digits; a missing wall time is written as an empty field.
    """
    if not reports:
        raise ConfigError("no sweep rows to write")
    n_detectors = max(len(r.pr_omega) for r in reports)
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(sweep_columns(n_detectors))
        for report in sorted(reports, key=lambda r: r.loss_db):
            pr = list(report.pr_omega) + [0.0] * (n_detectors - len(report.pr_omega))
            writer.writerow(
                [_fmt(report.loss_db), _fmt(report.rate_passive), _fmt(report.rate_active_limit)]
                + [str(report.combinations_evaluated), str(report.combinations_cut)]
                + [_fmt(p) for p in pr]
                + [_fmt(report.wall_time_s), report.status]
            )
    logger.info("wrote %d rows to %s", len(reports), out)
    return out


def read_sweep_csv(path: str) -> List[Dict[str, Any]]:
    """
    Parse a sweep CSV back into rows of typed values

    Raises:
        ConfigError: If the file is missing, empty or malformed
    """
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            rows = list(csv.reader(f))
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}")
    if len(rows) < 2:
        raise ConfigError(f"{path} has no data rows")
    header = rows[0]
    missing = [c for c in BASE_COLUMNS + TAIL_COLUMNS if c not in header]
    if missing:
        raise ConfigError(f"{path} lacks columns {missing}", [(1, c, "missing column") for c in missing])

    parsed = []
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ConfigError(f"{path}: row {line_no} has {len(row)} fields, expected {len(header)}", [(line_no, "row", "wrong field count")])
        record: Dict[str, Any] = {}
        for column, raw in zip(header, row):
            if column == "status":
                record[column] = raw
            elif column == "wall_time_s" and raw == "":
                record[column] = None
            else:
                try:
                    value = float(raw)
                except ValueError:
                    raise ConfigError(f"{path}: bad number {raw!r}", [(line_no, column, "not a number")])
                if not math.isfinite(value):
                    raise ConfigError(f"{path}: non-finite {column}", [(line_no, column, "not finite")])
                record[column] = int(value) if column.startswith("combos_") else value
        parsed.append(record)
    return parsed
