"""UTC second-precision timestamps and injectable clocks.

The IDSTACK_CLOCK environment variable pins the default clock to a fixed
RFC 3339 instant, which makes command output reproducible in tests.
"""

from __future__ import annotations

import os
from datetime import datetime, timezone
from typing import Callable

Clock = Callable[[], datetime]

CLOCK_ENV = "IDSTACK_CLOCK"
_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


def format_timestamp(instant: datetime) -> str:
    if instant.tzinfo is None:
        raise ValueError("timestamp must be timezone-aware")
    return instant.astimezone(timezone.utc).strftime(_FORMAT)


def parse_timestamp(text: str) -> datetime:
    try:
        parsed = datetime.strptime(text, _FORMAT)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"not a UTC second-precision RFC 3339 timestamp: {text!r}") from exc
    return parsed.replace(tzinfo=timezone.utc)


def system_clock() -> datetime:
    return datetime.now(timezone.utc).replace(microsecond=0)


def fixed_clock(instant: datetime | str) -> Clock:
    moment = parse_timestamp(instant) if isinstance(instant, str) else instant
    if moment.tzinfo is None:
        raise ValueError("fixed clock instant must be timezone-aware")
    return lambda: moment


def default_clock() -> Clock:
    """System clock unless IDSTACK_CLOCK pins a fixed instant."""
    pinned = os.environ.get(CLOCK_ENV)
    if pinned:
        return fixed_clock(parse_timestamp(pinned))
    return system_clock
