"""Generated event logs for demos and tests."""
from __future__ import annotations

import io
from datetime import datetime, timedelta, timezone

import numpy as np

from .eventlog import EventLog, parse_event_log

EPOCH = datetime(2020, 1, 6, 8, 0, 0, tzinfo=timezone.utc)  # a Monday


def rows_to_csv(rows) -> str:
    lines = ["CaseID,ActivityID,CompleteTimestamp"]
    lines += [f"{c},{a},{t:%Y-%m-%d %H:%M:%S}" for c, a, t in rows]
    return "\n".join(lines) + "\n"


def deterministic_log(n_cases: int = 100, trace=("a", "b", "c"), gap_seconds: float = 60,
                      case_spacing: timedelta = timedelta(hours=1)) -> EventLog:
    """``n_cases`` copies of ``trace`` with a constant gap between consecutive events."""
    rows = []
    for i in range(n_cases):
        start = EPOCH + i * case_spacing
        for k, act in enumerate(trace):
            rows.append((f"case{i:04d}", act, start + timedelta(seconds=k * gap_seconds)))
    return parse_event_log(io.StringIO(rows_to_csv(rows)))


def random_traces(rng: np.random.Generator, n_activities: int = 5, n_cases: int = 20,
                  max_len: int = 8) -> list[list[int]]:
    return [rng.integers(0, n_activities, size=rng.integers(1, max_len + 1)).tolist()
            for _ in range(n_cases)]


def log_from_traces(traces, gaps=None, rng: np.random.Generator | None = None) -> EventLog:
    """Build a log from activity-index traces; gaps are drawn from ``rng`` when not given."""
    rows = []
    for i, trace in enumerate(traces):
        t = EPOCH + timedelta(hours=5 * i)
        for k, act in enumerate(trace):
            if k:
                step = gaps[i][k - 1] if gaps is not None else int(rng.integers(0, 7200)) if rng is not None else 60
                t = t + timedelta(seconds=step)
            rows.append((f"c{i}", f"act{act}", t))
    return parse_event_log(io.StringIO(rows_to_csv(rows)))


def stochastic_process_log(n_cases: int = 300, seed: int = 0) -> EventLog:
    """A small loan-like process with choice, a self-loop and random waiting times."""
    rng = np.random.default_rng(seed)
    rows = []
    t = EPOCH
    for i in range(n_cases):
        t = t + timedelta(minutes=int(rng.integers(10, 240)))
        trace = ["submit"]
        if rng.random() < 0.7:
            trace += ["assess"] * int(rng.integers(1, 4))
            trace += ["approve" if rng.random() < 0.6 else "decline"]
        else:
            trace += ["request-info", "assess", "decline"]
        trace += ["close"]
        cur = t
        for act in trace:
            rows.append((f"L{i:05d}", act, cur))
            mean = {"submit": 600, "assess": 3600, "request-info": 86400}.get(act, 1800)
            cur = cur + timedelta(seconds=int(rng.exponential(mean)) + 1)
    return parse_event_log(io.StringIO(rows_to_csv(rows)))
