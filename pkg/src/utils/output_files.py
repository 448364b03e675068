"""
CSV result files and their metadata sidecars.
"""

import csv
import hashlib
import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

from src import __version__
from src.utils.formatting import format_cell

logger = logging.getLogger(__name__)


def config_hash(source: Path | bytes | str) -> str:
    """
    SHA-256 of a configuration file or its canonical text.

    Args:
        source: File path, raw bytes or text

    Returns:
        Hex digest
    """
    if isinstance(source, Path):
        data = source.read_bytes()
    elif isinstance(source, str):
        data = source.encode("utf-8")
    else:
        data = source
    return hashlib.sha256(data).hexdigest()


def write_csv(
    path: Path,
    columns: Sequence[str],
    rows: Iterable[dict[str, Any]],
    digits: int = 17,
) -> Path:
    """
    Write rows in the given order with fixed float formatting.

    Args:
        path: Target file; parent directories are created
        columns: Column names; missing values become empty cells
        rows: Row dictionaries
        digits: Significant digits for floats

    Returns:
        Path to the written file
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_cell(row.get(column), digits) for column in columns])
    logger.info(f"Wrote {path}")
    return path


def read_csv(path: Path) -> list[dict[str, str]]:
    """Read a result CSV back as a list of string dictionaries."""
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def metadata_path(csv_path: Path) -> Path:
    csv_path = Path(csv_path)
    return csv_path.with_name(f"{csv_path.stem}.meta.json")


def write_metadata(
    csv_path: Path,
    config_digest: str,
    extra: Optional[dict[str, Any]] = None,
) -> Path:
    """
    Write the ``<name>.meta.json`` sidecar of a CSV.

    Args:
        csv_path: The CSV the metadata describes
        config_digest: SHA-256 of the configuration that produced it
        extra: Additional entries (assumptions, overrides, parameter sets)

    Returns:
        Path to the sidecar
    """
    meta = {
        "version": __version__,
        "config_sha256": config_digest,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "csv": Path(csv_path).name,
    }
    if extra:
        meta.update(extra)

    path = metadata_path(csv_path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2, sort_keys=True, default=str)
        f.write("\n")
    return path
