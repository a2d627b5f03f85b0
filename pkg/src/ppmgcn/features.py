"""Prefix encoding: one ``num_nodes x 4`` matrix per event, plus targets and stage labels.

Each row of a feature matrix belongs to one activity and holds the time
features of that activity's latest occurrence in the prefix:

0. seconds since the previous event of the case
1. seconds since the case started
2. seconds since midnight
3. weekday (Monday = 0)

Columns 0 and 1 are divided by their training means, column 2 by 86,400 and
column 3 by 7. Activities not yet seen keep an all-zero row.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from datetime import datetime
from typing import Sequence

import numpy as np

from .errors import EmptyLogError, RangeError
from .eventlog import Case, EventLog

SECONDS_PER_DAY = 86_400.0
DAYS_PER_WEEK = 7.0
N_FEATURES = 4


@dataclass(frozen=True)
class FeatureScaling:
    mean_time_since_prev: float = 1.0
    mean_time_since_start: float = 1.0
    mean_time_target: float = 1.0
    seconds_per_day_divisor: float = SECONDS_PER_DAY
    weekday_divisor: float = DAYS_PER_WEEK

    @property
    def divisors(self) -> np.ndarray:
        return np.array([self.mean_time_since_prev, self.mean_time_since_start,
                         self.seconds_per_day_divisor, self.weekday_divisor])

    def scale(self, raw: np.ndarray) -> np.ndarray:
        return raw / self.divisors

    def unscale(self, scaled: np.ndarray) -> np.ndarray:
        return scaled * self.divisors


@dataclass(frozen=True, eq=False)
class Sample:
    features: np.ndarray
    event_target: int
    time_target_seconds: float | None
    quartile: int
    quarter: int
    case_id: str
    position: int


def event_vectors(case: Case) -> np.ndarray:
    """Unscaled 4-vectors of every event in ``case``, shape ``(len(case), 4)``."""
    t0 = case.start
    out = np.empty((len(case), N_FEATURES))
    prev = t0
    for k, e in enumerate(case.events):
        ts = e.timestamp
        midnight = ts.replace(hour=0, minute=0, second=0, microsecond=0)
        out[k] = (
            (ts - prev).total_seconds(),
            (ts - t0).total_seconds(),
            (ts - midnight).total_seconds(),
            ts.weekday(),
        )
        prev = ts
    return out


def time_targets(case: Case) -> list[float | None]:
    ts = [e.timestamp for e in case.events]
    return [(b - a).total_seconds() for a, b in zip(ts, ts[1:])] + [None]


def fit_feature_scaling(train: EventLog) -> FeatureScaling:
    """Means of the two duration features over all events, and of the defined time targets.

    Any mean that comes out as zero is replaced by 1.
    """
    if not train.cases:
        raise EmptyLogError("cannot fit scaling on an empty log")
    vecs = np.concatenate([event_vectors(c) for c in train.cases])
    targets = [t for c in train.cases for t in time_targets(c) if t is not None]
    m_prev, m_start = vecs[:, 0].mean(), vecs[:, 1].mean()
    m_target = float(np.mean(targets)) if targets else 0.0

    def nz(x: float) -> float:
        return float(x) if x > 0 else 1.0

    return FeatureScaling(nz(m_prev), nz(m_start), nz(m_target))


def encode_prefix(case: Case, position: int, num_nodes: int, scaling: FeatureScaling | None = None) -> np.ndarray:
    """Feature matrix of ``case.events[: position + 1]``, built from scratch."""
    scaling = scaling or FeatureScaling()
    if not 0 <= position < len(case):
        raise IndexError(f"position {position} out of range for case of length {len(case)}")
    vecs = scaling.scale(event_vectors(case)[: position + 1])
    x = np.zeros((num_nodes, N_FEATURES))
    for k in range(position + 1):
        x[case.events[k].activity_id] = vecs[k]
    return x


def quartile_of(position: int, case_length: int) -> int:
    if case_length < 1 or not 0 <= position < case_length:
        raise RangeError(f"position {position} invalid for case length {case_length}")
    return position * 4 // case_length + 1


def quarter_of(event_time: datetime, case_start: datetime, case_duration: float) -> int:
    elapsed = (event_time - case_start).total_seconds()
    if elapsed < 0 or elapsed > case_duration:
        raise RangeError(f"event at +{elapsed}s lies outside case span of {case_duration}s")
    if case_duration == 0:
        return 1
    return min(4, math.floor(4 * elapsed / case_duration) + 1)


def build_samples(log: EventLog, scaling: FeatureScaling) -> list[Sample]:
    """One sample per event of every case.

    The event target of the last event of a case is ``num_nodes`` (end of case)
    and its time target is ``None``.
    """
    n = log.num_nodes
    out: list[Sample] = []
    for case in log.cases:
        vecs = scaling.scale(event_vectors(case))
        targets = time_targets(case)
        length, start, duration = len(case), case.start, case.duration
        x = np.zeros((n, N_FEATURES))
        for k, e in enumerate(case.events):
            x[e.activity_id] = vecs[k]
            nxt = case.events[k + 1].activity_id if k + 1 < length else n
            out.append(Sample(
                features=x.copy(),
                event_target=nxt,
                time_target_seconds=targets[k],
                quartile=quartile_of(k, length),
                quarter=quarter_of(e.timestamp, start, duration),
                case_id=case.case_id,
                position=k,
            ))
    return out


@dataclass(frozen=True, eq=False)
class SampleArrays:
    """Column-stacked samples, the form the training loop consumes."""

    features: np.ndarray   # (N, num_nodes, 4)
    event_targets: np.ndarray  # (N,) int
    time_targets: np.ndarray   # (N,) seconds, NaN at end of case
    quartiles: np.ndarray
    quarters: np.ndarray

    def __len__(self) -> int:
        return len(self.event_targets)

    @property
    def has_time(self) -> np.ndarray:
        return ~np.isnan(self.time_targets)

    def select(self, mask: np.ndarray) -> SampleArrays:
        return SampleArrays(self.features[mask], self.event_targets[mask], self.time_targets[mask],
                            self.quartiles[mask], self.quarters[mask])


def time_view(arr: SampleArrays, end_time: str = "exclude") -> SampleArrays:
    """Samples the time head sees: end-of-case rows dropped, or kept with target 0."""
    if end_time == "exclude":
        return arr.select(arr.has_time)
    if end_time == "zero":
        return SampleArrays(arr.features, arr.event_targets, np.nan_to_num(arr.time_targets, nan=0.0),
                            arr.quartiles, arr.quarters)
    raise ValueError(f"unknown end-of-case time policy {end_time!r}")


def stack_samples(samples: Sequence[Sample], num_nodes: int | None = None) -> SampleArrays:
    if not samples:
        n = num_nodes or 0
        return SampleArrays(np.zeros((0, n, N_FEATURES)), np.zeros(0, dtype=np.int64), np.zeros(0),
                            np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))
    return SampleArrays(
        features=np.stack([s.features for s in samples]),
        event_targets=np.array([s.event_target for s in samples], dtype=np.int64),
        time_targets=np.array([np.nan if s.time_target_seconds is None else s.time_target_seconds
                               for s in samples]),
        quartiles=np.array([s.quartile for s in samples], dtype=np.int64),
        quarters=np.array([s.quarter for s in samples], dtype=np.int64),
    )


def samples_to_csv(samples: Sequence[Sample], labels: Sequence[str] | None = None) -> str:
    """Flattened features, targets and stages, one row per sample."""
    if not samples:
        return ""
    n = samples[0].features.shape[0]
    labels = list(labels) if labels is not None else [str(i) for i in range(n)]
    names = ["dt_prev", "dt_start", "t_midnight", "weekday"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["case_id", "position"] + [f"{lab}:{f}" for lab in labels for f in names]
               + ["event_target", "time_target_seconds", "quartile", "quarter"])
    for s in samples:
        w.writerow([s.case_id, s.position] + [repr(float(v)) for v in s.features.ravel()]
                   + [s.event_target, "" if s.time_target_seconds is None else repr(s.time_target_seconds),
                      s.quartile, s.quarter])
    return buf.getvalue()
