"""Event-log parsing, statistics and case-level splits."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, TextIO

import numpy as np

from .errors import EmptyLogError, SchemaError, SplitError, TimestampError

DEFAULT_COLUMNS = ("CaseID", "ActivityID", "CompleteTimestamp")
DEFAULT_TIMESTAMP_FORMAT = "%Y-%m-%d %H:%M:%S"


@dataclass(frozen=True)
class Event:
    case_id: str
    activity_id: int
    timestamp: datetime
    # input-file row index (0-based, header excluded); tie-breaker only
    row: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Case:
    case_id: str
    events: tuple[Event, ...]

    def __post_init__(self):
        if not self.events:
            raise EmptyLogError(f"case {self.case_id!r} has no events")

    @property
    def start(self) -> datetime:
        return self.events[0].timestamp

    @property
    def end(self) -> datetime:
        return self.events[-1].timestamp

    @property
    def duration(self) -> float:
        """Seconds between first and last event."""
        return (self.end - self.start).total_seconds()

    def __len__(self) -> int:
        return len(self.events)


@dataclass(frozen=True)
class EventLog:
    """Cases ordered by start time, plus the activity alphabet.

    ``alphabet[i]`` is the raw label of activity id ``i``. Sub-logs produced by
    the split functions keep the alphabet of their parent, so ``num_nodes`` is
    stable across train/validation/test.
    """

    cases: tuple[Case, ...]
    alphabet: tuple[str, ...]

    @property
    def num_nodes(self) -> int:
        return len(self.alphabet)

    @property
    def n_events(self) -> int:
        return sum(len(c) for c in self.cases)

    def __len__(self) -> int:
        return len(self.cases)

    def label_index(self) -> dict[str, int]:
        return {label: i for i, label in enumerate(self.alphabet)}

    def subset(self, cases: Iterable[Case]) -> EventLog:
        return EventLog(_sort_cases(cases), self.alphabet)


@dataclass(frozen=True)
class LogStats:
    n_events: int
    n_cases: int
    n_activity_types: int
    avg_case_duration_seconds: float
    avg_events_per_case: float

    def rows(self) -> list[tuple[str, str]]:
        return [
            ("No. of events", f"{self.n_events:,}"),
            ("No. of process cases", f"{self.n_cases:,}"),
            ("No. of activity types", f"{self.n_activity_types}"),
            ("Avg. case duration (sec.)", f"{self.avg_case_duration_seconds:,.0f}"),
            ("Avg. no. of events per case", f"{self.avg_events_per_case:.3f}"),
        ]

    def to_text(self, title: str | None = None) -> str:
        rows = self.rows()
        width = max(len(k) for k, _ in rows)
        vwidth = max(len(v) for _, v in rows)
        lines = [title] if title else []
        lines += [f"{k:<{width}}  {v:>{vwidth}}" for k, v in rows]
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n_events", "n_cases", "n_activity_types",
                    "avg_case_duration_seconds", "avg_events_per_case"])
        w.writerow([self.n_events, self.n_cases, self.n_activity_types,
                    repr(self.avg_case_duration_seconds), f"{self.avg_events_per_case:.3f}"])
        return buf.getvalue()


def _sort_cases(cases: Iterable[Case]) -> tuple[Case, ...]:
    return tuple(sorted(cases, key=lambda c: (c.start, c.events[0].row)))


def parse_timestamp(value: str, fmt: str = DEFAULT_TIMESTAMP_FORMAT) -> datetime:
    """Parse ``value`` as UTC. Fractional seconds are accepted for the default format."""
    value = value.strip()
    try:
        ts = datetime.strptime(value, fmt)
    except ValueError:
        if fmt != DEFAULT_TIMESTAMP_FORMAT:
            raise
        ts = datetime.strptime(value, fmt + ".%f")
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime, fmt: str = DEFAULT_TIMESTAMP_FORMAT) -> str:
    text = ts.strftime(fmt)
    if ts.microsecond and fmt == DEFAULT_TIMESTAMP_FORMAT:
        text += f".{ts.microsecond:06d}"
    return text


def parse_event_log(
    source: TextIO | str,
    column_map: tuple[str, str, str] = DEFAULT_COLUMNS,
    timestamp_format: str = DEFAULT_TIMESTAMP_FORMAT,
    delimiter: str = ",",
) -> EventLog:
    """Read a delimited (case, activity, timestamp) table into an :class:`EventLog`.

    ``source`` is an open text stream or a path. Activities are numbered in
    order of first appearance in the file; events of a case are sorted by
    timestamp with ties kept in file order.
    """
    if isinstance(source, str):
        with open(source, newline="", encoding="utf-8-sig") as fh:
            return parse_event_log(fh, column_map, timestamp_format, delimiter)

    reader = csv.reader(source, delimiter=delimiter)
    header = next(reader, None)
    if header is None:
        raise EmptyLogError("event log file is empty")
    header = [h.strip() for h in header]
    idx = []
    for col in column_map:
        if col not in header:
            raise SchemaError(f"missing column {col!r} (header: {header})")
        idx.append(header.index(col))
    ci, ai, ti = idx

    labels: dict[str, int] = {}
    by_case: dict[str, list[Event]] = {}
    row = 0
    for line_no, rec in enumerate(reader, start=2):
        if not rec or all(not x.strip() for x in rec):
            continue
        case_id, label, raw_ts = rec[ci].strip(), rec[ai].strip(), rec[ti]
        try:
            ts = parse_timestamp(raw_ts, timestamp_format)
        except ValueError:
            raise TimestampError(line_no, raw_ts, timestamp_format) from None
        act = labels.setdefault(label, len(labels))
        by_case.setdefault(case_id, []).append(Event(case_id, act, ts, row))
        row += 1

    if not by_case:
        raise EmptyLogError("event log has a header but no events")

    cases = (
        Case(cid, tuple(sorted(evs, key=lambda e: (e.timestamp, e.row))))
        for cid, evs in by_case.items()
    )
    return EventLog(_sort_cases(cases), tuple(labels))


def write_event_log(
    log: EventLog,
    sink: TextIO,
    column_map: tuple[str, str, str] = DEFAULT_COLUMNS,
    timestamp_format: str = DEFAULT_TIMESTAMP_FORMAT,
    delimiter: str = ",",
) -> None:
    """Write ``log`` back as rows, in original file order.

    Parsing the output reproduces ``log`` (alphabet included) when ``log`` came
    from :func:`parse_event_log`.
    """
    w = csv.writer(sink, delimiter=delimiter, lineterminator="\n")
    w.writerow(column_map)
    events = sorted((e for c in log.cases for e in c.events), key=lambda e: e.row)
    for e in events:
        w.writerow([e.case_id, log.alphabet[e.activity_id], format_timestamp(e.timestamp, timestamp_format)])


def log_statistics(log: EventLog) -> LogStats:
    if not log.cases:
        raise EmptyLogError("cannot compute statistics of an empty log")
    n_events = log.n_events
    n_cases = len(log.cases)
    durations = np.array([c.duration for c in log.cases])
    return LogStats(
        n_events=n_events,
        n_cases=n_cases,
        n_activity_types=log.num_nodes,
        avg_case_duration_seconds=float(durations.mean()),
        avg_events_per_case=n_events / n_cases,
    )


def chronological_case_split(log: EventLog, train_fraction: float = 2 / 3) -> tuple[EventLog, EventLog]:
    """First ``floor(train_fraction * n_cases)`` cases by start time train, the rest test."""
    if not 0 < train_fraction < 1:
        raise SplitError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    if len(log.cases) < 2:
        raise SplitError("need at least 2 cases to split")
    cases = _sort_cases(log.cases)
    k = math.floor(train_fraction * len(cases))
    return EventLog(cases[:k], log.alphabet), EventLog(cases[k:], log.alphabet)


def sample_validation_split(train: EventLog, fraction: float = 0.2, seed: int = 0) -> tuple[EventLog, EventLog]:
    """Randomly hold out whole cases for validation.

    Returns ``(effective_train, validation)``.
    """
    if not 0 < fraction < 1:
        raise SplitError(f"fraction must lie in (0, 1), got {fraction}")
    n = len(train.cases)
    if n < 2:
        raise SplitError("need at least 2 cases to split")
    k = math.floor(fraction * n)
    rng = np.random.default_rng(seed)
    picked = set(rng.choice(n, size=k, replace=False).tolist())
    val = [c for i, c in enumerate(train.cases) if i in picked]
    rest = [c for i, c in enumerate(train.cases) if i not in picked]
    return train.subset(rest), train.subset(val)
