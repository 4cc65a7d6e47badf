"""Text helpers for log lines and table captions."""
from typing import Iterable


# plural spec after https://github.com/Rapptz/RoboDanny/blob/7af9dbb7c44027e1c34e1e9b545c52c416acadae/cogs/utils/formats.py
class plural:
    """``f"{plural(3):replication}"`` -> ``"3 replications"``; irregular plurals go
    after a bar, ``f"{plural(2):matrix|matrices}"``."""

    __slots__ = ("value",)

    def __init__(self, value: int):
        self.value = value

    def __format__(self, format_spec):
        one, _, many = format_spec.partition("|")
        word = one if abs(self.value) == 1 else (many or f"{one}s")
        return f"{self.value} {word}"


def human_join(items: Iterable[str], final: str = "and") -> str:
    items = [str(item) for item in items]
    if len(items) < 3:
        return f" {final} ".join(items)
    return f"{', '.join(items[:-1])} {final} {items[-1]}"


def short_float(x: float) -> str:
    return f"{x:.4g}"


def grid_point(phi: float, psi: float) -> str:
    return f"phi={short_float(phi)}, psi={short_float(psi)}"
