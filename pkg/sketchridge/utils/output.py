"""CSV and JSON manifest writers.

CSV: UTF-8, header row, '\\n' line endings, reals written with ``repr`` so they
round-trip exactly. Nothing time- or host-dependent is written, so identical inputs
give identical bytes.
"""
import csv
import logging
import platform
from pathlib import Path
from typing import Iterable, List, Mapping, Sequence

import numpy as np
import orjson
import pydantic
import scipy

from sketchridge.errors import ConfigError, OutputError

logger = logging.getLogger(__name__)


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Mapping]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([format_value(row.get(c)) for c in columns])
    except OSError as e:
        raise OutputError(f"Could not write {path}: {e}") from e

    logger.info("Wrote %s", path)
    return path


def versions() -> dict:
    from sketchridge import __version__

    return {
        "sketchridge": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pydantic": pydantic.VERSION,
    }


def write_manifest(path: Path, command: str, config: dict, seeds: dict, files: List[Path]) -> Path:
    payload = {
        "command": command,
        "config": config,
        "seeds": seeds,
        "files": sorted(Path(f).name for f in files),
        "versions": versions(),
    }
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(
            orjson.dumps(
                payload,
                option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY,
            )
        )
    except OSError as e:
        raise OutputError(f"Could not write {path}: {e}") from e

    logger.info("Wrote %s", path)
    return path


def read_json(path: Path):
    try:
        return orjson.loads(Path(path).read_bytes())
    except OSError as e:
        raise ConfigError(f"Could not read {path}: {e}") from e
    except orjson.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}") from e
