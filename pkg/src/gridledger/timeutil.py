"""Timestamp helpers. All instants are integer unix seconds, rendered as
ISO-8601 UTC with a trailing Z (second resolution)."""

from __future__ import annotations

from datetime import datetime, timezone


def iso_utc(ts: int) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_iso(text: str) -> int:
    """Parse ISO-8601 UTC text ("2025-02-14T10:30:00Z") to unix seconds."""
    try:
        dt = datetime.strptime(text, "%Y-%m-%dT%H:%M:%SZ")
    except ValueError as exc:
        raise UnparsableTimestamp(text) from exc
    return int(dt.replace(tzinfo=timezone.utc).timestamp())


def hour_of(ts: int) -> int:
    return datetime.fromtimestamp(ts, tz=timezone.utc).hour


class UnparsableTimestamp(ValueError):
    pass
