"""Overall and stage-wise scoring (quartiles by event position, quarters by elapsed time)."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import UsageError
from .features import SECONDS_PER_DAY, Sample, SampleArrays, stack_samples, time_view
from .models import Head, Model, TrainedModel, predict_event_batch, predict_time_batch

STAGES = (1, 2, 3, 4)
COLUMNS = [f"quartile_{i}" for i in STAGES] + [f"quarter_{i}" for i in STAGES] + ["overall"]


@dataclass(eq=False)
class StageMetrics:
    """Values per quartile, per quarter and overall; NaN marks an empty cell.

    ``*_sd`` fields are filled when the metrics aggregate several runs.
    """

    kind: str  # "accuracy" or "mae_days"
    quartiles: np.ndarray
    quarters: np.ndarray
    overall: float
    quartile_counts: np.ndarray
    quarter_counts: np.ndarray
    quartiles_sd: np.ndarray | None = None
    quarters_sd: np.ndarray | None = None
    overall_sd: float | None = None
    n_runs: int = 1

    @property
    def count(self) -> int:
        return int(self.quartile_counts.sum())

    def values(self) -> np.ndarray:
        return np.concatenate([self.quartiles, self.quarters, [self.overall]])

    def sds(self) -> np.ndarray | None:
        if self.quartiles_sd is None:
            return None
        return np.concatenate([self.quartiles_sd, self.quarters_sd, [self.overall_sd]])

    def recombination_error(self) -> float:
        """Largest gap between ``overall`` and the count-weighted mean of either stage family."""
        gaps = []
        for vals, counts in ((self.quartiles, self.quartile_counts), (self.quarters, self.quarter_counts)):
            nz = counts > 0
            if counts.sum() == 0:
                continue
            combined = float((vals[nz] * counts[nz]).sum() / counts[nz].sum())
            gaps.append(abs(combined - self.overall))
        return max(gaps, default=0.0)


def stage_metrics(per_sample: np.ndarray, quartiles: np.ndarray, quarters: np.ndarray, kind: str) -> StageMetrics:
    """Mean of ``per_sample`` within each stage cell and overall."""
    per_sample = np.asarray(per_sample, dtype=np.float64)

    def cells(labels):
        vals, counts = np.full(4, np.nan), np.zeros(4, dtype=np.int64)
        for i, s in enumerate(STAGES):
            sel = per_sample[labels == s]
            counts[i] = sel.size
            if sel.size:
                vals[i] = sel.sum() / sel.size
        return vals, counts

    qv, qc = cells(np.asarray(quartiles))
    tv, tc = cells(np.asarray(quarters))
    overall = per_sample.sum() / per_sample.size if per_sample.size else np.nan
    return StageMetrics(kind, qv, tv, float(overall), qc, tc)


def _arrays(samples: Sequence[Sample] | SampleArrays, num_nodes: int) -> SampleArrays:
    if isinstance(samples, SampleArrays):
        return samples
    return stack_samples(samples, num_nodes)


def _model(m: Model | TrainedModel) -> Model:
    return m.model if isinstance(m, TrainedModel) else m


def accuracy_by_stage(model: Model | TrainedModel, samples: Sequence[Sample] | SampleArrays) -> StageMetrics:
    model = _model(model)
    if model.config.head is not Head.EVENT:
        raise UsageError("accuracy needs an event-head model")
    arr = _arrays(samples, model.config.num_nodes)
    pred = predict_event_batch(model, arr.features).argmax(axis=1)
    correct = (pred == arr.event_targets).astype(np.float64)
    return stage_metrics(correct, arr.quartiles, arr.quarters, "accuracy")


def mae_by_stage(model: Model | TrainedModel, samples: Sequence[Sample] | SampleArrays,
                 end_time: str | None = None) -> StageMetrics:
    """Mean absolute error in days.

    End-of-case samples are skipped (``end_time="exclude"``) or scored against
    a target of 0 s (``"zero"``). By default a trained model's own policy is used.
    """
    if end_time is None:
        end_time = model.end_time_target if isinstance(model, TrainedModel) else "exclude"
    model = _model(model)
    if model.config.head is not Head.TIME:
        raise UsageError("MAE needs a time-head model")
    arr = time_view(_arrays(samples, model.config.num_nodes), end_time)
    pred = predict_time_batch(model, arr.features)
    err = np.abs(pred - arr.time_targets) / SECONDS_PER_DAY
    return stage_metrics(err, arr.quartiles, arr.quarters, "mae_days")


def evaluate(model: Model | TrainedModel, samples: Sequence[Sample] | SampleArrays) -> StageMetrics:
    if _model(model).config.head is Head.EVENT:
        return accuracy_by_stage(model, samples)
    return mae_by_stage(model, samples)


def aggregate_runs(runs: Sequence[StageMetrics]) -> StageMetrics:
    """Per-cell mean and sample standard deviation across runs (SD 0 for one run)."""
    if not runs:
        raise ValueError("no runs to aggregate")
    v = np.stack([r.values() for r in runs])
    mean = v.mean(axis=0)
    sd = v.std(axis=0, ddof=1) if len(runs) > 1 else np.zeros_like(mean)
    first = runs[0]
    return StageMetrics(first.kind, mean[:4], mean[4:8], float(mean[8]),
                        first.quartile_counts.copy(), first.quarter_counts.copy(),
                        sd[:4], sd[4:8], float(sd[8]), n_runs=len(runs))


def _fmt(x: float, digits: int = 4) -> str:
    return "n/a" if np.isnan(x) else f"{x:.{digits}f}"


def render_report(metrics: Mapping[str, StageMetrics], dataset: str = "custom", head: str = "",
                  with_sd: bool = False) -> tuple[str, str]:
    """Aligned text table and full-precision CSV, one row per variant.

    Columns: quartiles 1-4, quarters 1-4, overall.
    """
    if not metrics:
        raise ValueError("nothing to report")
    kinds = {m.kind for m in metrics.values()}
    kind = kinds.pop() if len(kinds) == 1 else "mixed"
    title = {"accuracy": "Accuracy", "mae_days": "MAE (days)"}.get(kind, kind)

    header = ["Model", "Q1", "Q2", "Q3", "Q4", "T1", "T2", "T3", "T4", "Overall"]
    rows = []
    for name, m in metrics.items():
        vals, sds = m.values(), m.sds()
        if with_sd and sds is not None:
            rows.append([name] + [f"{_fmt(v)}±{_fmt(s)}" if not np.isnan(v) else "n/a"
                                  for v, s in zip(vals, sds)])
        else:
            rows.append([name] + [_fmt(v) for v in vals])
    widths = [max(len(r[i]) for r in rows + [header]) for i in range(len(header))]

    def line(r):
        return "  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths)))

    heading = f"{title} - {dataset}" + (f" ({head} head)" if head else "")
    text = [heading, "Q = quartiles based on events, T = quarters based on duration", line(header),
            "  ".join("-" * w for w in widths)]
    text += [line(r) for r in rows]

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dataset", "head", "variant", "metric", "n_runs"] + COLUMNS
               + [f"{c}_sd" for c in COLUMNS]
               + [f"quartile_{i}_count" for i in STAGES] + [f"quarter_{i}_count" for i in STAGES])
    for name, m in metrics.items():
        sds = m.sds()
        w.writerow([dataset, head, name, m.kind, m.n_runs]
                   + [_full(v) for v in m.values()]
                   + ([_full(v) for v in sds] if sds is not None else [""] * len(COLUMNS))
                   + [int(c) for c in m.quartile_counts] + [int(c) for c in m.quarter_counts])
    return "\n".join(text) + "\n", buf.getvalue()


def _full(x: float) -> str:
    return "" if np.isnan(x) else repr(float(x))


def _parse(x: str) -> float:
    return np.nan if x == "" else float(x)


def read_report_csv(text: str) -> dict[str, StageMetrics]:
    """Inverse of the CSV half of :func:`render_report`."""
    out = {}
    for row in csv.DictReader(io.StringIO(text)):
        vals = np.array([_parse(row[c]) for c in COLUMNS])
        has_sd = row[f"{COLUMNS[0]}_sd"] != "" or row["overall_sd"] != ""
        sds = np.array([_parse(row[f"{c}_sd"]) for c in COLUMNS]) if has_sd else None
        out[row["variant"]] = StageMetrics(
            row["metric"], vals[:4], vals[4:8], float(vals[8]),
            np.array([int(row[f"quartile_{i}_count"]) for i in STAGES]),
            np.array([int(row[f"quarter_{i}_count"]) for i in STAGES]),
            None if sds is None else sds[:4], None if sds is None else sds[4:8],
            None if sds is None else float(sds[8]), int(row["n_runs"]),
        )
    return out
