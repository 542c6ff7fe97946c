"""Small shared helpers."""

from __future__ import annotations

import re

_DURATION_RE = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*(ms|s|m|h)?\s*$")

_UNIT_SECONDS = {"ms": 1e-3, "s": 1.0, "m": 60.0, "h": 3600.0, None: 1.0}


def parse_duration(text: str | float | int | None) -> float | None:
    """Parse a human-readable duration ("30s", "500ms", "2m") into seconds.

    Bare numbers are seconds.  ``None`` means no budget.
    """
    if text is None:
        return None
    if isinstance(text, (int, float)):
        value = float(text)
    else:
        m = _DURATION_RE.match(text)
        if not m:
            raise ValueError(f"cannot parse duration: {text!r}")
        value = float(m.group(1)) * _UNIT_SECONDS[m.group(2)]
    if value < 0:
        raise ValueError("durations must be non-negative")
    return value
