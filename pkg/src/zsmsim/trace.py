"""Trace records and the tab-separated trace file format.

One record per line, fields in this order::

    tick  step_label  source  target  correlation_id  slice_id  detail

``step_label`` is ``-`` for hops that carry no use-case step number.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import MalformedTrace

NO_STEP = "-"
FIELD_COUNT = 7


@dataclass(frozen=True)
class TraceRecord:
    tick: int
    step: str
    source: str
    target: str
    correlation_id: str
    slice_id: str = "-"
    detail: str = ""

    def __post_init__(self):
        for name in ("step", "source", "target", "correlation_id", "slice_id", "detail"):
            value = getattr(self, name)
            if "\t" in value or "\n" in value or "\r" in value:
                raise ValueError(f"{name} must not contain tabs or newlines: {value!r}")

    def to_line(self) -> str:
        return "\t".join(
            (str(self.tick), self.step or NO_STEP, self.source, self.target,
             self.correlation_id, self.slice_id, self.detail)
        )

    @classmethod
    def from_line(cls, line: str, lineno: int = 0) -> "TraceRecord":
        parts = line.split("\t")
        if len(parts) != FIELD_COUNT:
            raise MalformedTrace(f"line {lineno}: expected {FIELD_COUNT} fields, got {len(parts)}")
        try:
            tick = int(parts[0])
        except ValueError:
            raise MalformedTrace(f"line {lineno}: tick {parts[0]!r} is not an integer") from None
        return cls(tick, parts[1], parts[2], parts[3], parts[4], parts[5], parts[6])

    @property
    def labelled(self) -> bool:
        return self.step != NO_STEP

    def fields(self) -> dict[str, str]:
        """Parse ``key=value`` tokens out of the detail text."""
        out = {}
        for token in self.detail.split():
            key, sep, value = token.partition("=")
            if sep:
                out[key] = value
        return out


def dumps(records: Iterable[TraceRecord]) -> str:
    return "".join(r.to_line() + "\n" for r in records)


def loads(text: str) -> list[TraceRecord]:
    records = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line:
            continue
        records.append(TraceRecord.from_line(line, lineno))
    return records


def write_trace(path: str | Path, records: Iterable[TraceRecord]) -> None:
    Path(path).write_text(dumps(records), encoding="utf-8")


def read_trace(path: str | Path) -> list[TraceRecord]:
    return loads(Path(path).read_text(encoding="utf-8"))


def chains(records: Iterable[TraceRecord]) -> dict[str, list[TraceRecord]]:
    """Group records by correlation id, preserving file order."""
    out: dict[str, list[TraceRecord]] = {}
    for r in records:
        out.setdefault(r.correlation_id, []).append(r)
    return out


def fmt_num(x: float) -> str:
    # repr round-trips exactly, so metrics recomputed from the trace match
    return repr(float(x))
