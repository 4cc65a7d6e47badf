import logging
import os
from typing import Callable, Optional, TypeVar

from dotenv import load_dotenv

load_dotenv()

logger = logging.getLogger(__name__)

T = TypeVar("T")


def env_fail(var: str, value: str):
    """Complain about an env var we can't make sense of."""
    logger.error("Malformed env var %s=%r", var, value)
    exit(1)


def env_value(key: str, cast: Callable[[str], T], default: T) -> T:
    raw = os.getenv(key)
    if raw is None or raw == "":
        return default
    try:
        return cast(raw)
    except ValueError:
        env_fail(key, raw)


def _scale(raw: str) -> str:
    if raw not in ("desk", "full"):
        raise ValueError(raw)
    return raw


workers: int = env_value("SKETCHRIDGE_WORKERS", int, 1)

out_dir: str = env_value("SKETCHRIDGE_OUT", str, "results")

log_level: str = env_value("SKETCHRIDGE_LOG_LEVEL", str, "INFO").upper()

scale: str = env_value("SKETCHRIDGE_SCALE", _scale, "desk")

#: relative singular-value cutoff for pseudoinverses; None means max(dims) * eps
pinv_rtol: Optional[float] = env_value("SKETCHRIDGE_PINV_RTOL", float, None)
