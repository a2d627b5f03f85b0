"""Single-sample Adam training with best-validation checkpointing, and multi-run experiments."""
from __future__ import annotations

import csv
import io
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .dfg import Dfg, mine_dfg
from .errors import ConfigError, NumericError
from .evaluation import StageMetrics, aggregate_runs, evaluate, read_report_csv, render_report
from .eventlog import EventLog, chronological_case_split, sample_validation_split
from .features import (Sample, SampleArrays, build_samples, fit_feature_scaling, stack_samples,
                       time_view)
from .models import (Head, Model, ModelConfig, TrainedModel, Variant, build_model, load_checkpoint,
                     save_checkpoint)
from .nn import PROB_FLOOR, AdamState, adam_update

log = logging.getLogger(__name__)

# Adam learning rates per dataset, head and variant
LEARNING_RATE_PRESETS: dict[str, dict[Head, dict[Variant, float]]] = {
    "helpdesk": {
        Head.TIME: {Variant.GCN_W: 1e-3, Variant.GCN_B: 1e-3, Variant.GCN_LB: 1e-3,
                    Variant.GCN_LW: 1e-3, Variant.MLP: 1e-4},
        Head.EVENT: {Variant.GCN_W: 1e-4, Variant.GCN_B: 1e-4, Variant.GCN_LB: 1e-4,
                     Variant.GCN_LW: 1e-3, Variant.MLP: 1e-4},
    },
    "bpi12w": {
        Head.TIME: {v: 1e-4 for v in Variant},
        Head.EVENT: {Variant.GCN_W: 1e-4, Variant.GCN_B: 1e-5, Variant.GCN_LB: 1e-4,
                     Variant.GCN_LW: 1e-4, Variant.MLP: 1e-5},
    },
}
DEFAULT_LEARNING_RATE = 1e-3

# how the time head treats end-of-case samples: "exclude" them, or score them with target 0
END_TIME_PRESETS = {"helpdesk": "zero", "bpi12w": "zero"}
DEFAULT_END_TIME = "exclude"


def preset_learning_rate(dataset: str, variant: Variant | str, head: Head | str) -> float:
    table = LEARNING_RATE_PRESETS.get(dataset)
    if table is None:
        return DEFAULT_LEARNING_RATE
    return table[Head(head)][Variant(variant)]


@dataclass(frozen=True)
class TrainConfig:
    variant: Variant = Variant.MLP
    head: Head = Head.EVENT
    learning_rate: float | None = None  # None: dataset preset
    max_epochs: int = 150
    patience: int = 20
    seed: int = 0
    shuffle_each_epoch: bool = True
    dataset: str = "custom"
    hidden_dims: tuple[int, int] = (64, 32)
    dropout_rate: float = 0.2
    train_fraction: float = 2 / 3
    validation_fraction: float = 0.2
    dfg_scope: str = "all"
    end_time_target: str | None = None  # None: dataset preset

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "head", Head(self.head))
        object.__setattr__(self, "hidden_dims", tuple(self.hidden_dims))
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be at least 1")
        if not 1 <= self.patience <= self.max_epochs:
            raise ConfigError(f"patience must lie in [1, max_epochs], got {self.patience}")
        if self.learning_rate is not None and self.learning_rate < 0:
            raise ConfigError("learning_rate must be non-negative")
        if self.dfg_scope not in ("all", "train"):
            raise ConfigError(f"dfg_scope must be 'all' or 'train', got {self.dfg_scope!r}")
        if self.end_time_target not in (None, "exclude", "zero"):
            raise ConfigError(f"end_time_target must be 'exclude' or 'zero', got {self.end_time_target!r}")

    @property
    def lr(self) -> float:
        if self.learning_rate is not None:
            return self.learning_rate
        return preset_learning_rate(self.dataset, self.variant, self.head)

    @property
    def end_time(self) -> str:
        if self.end_time_target is not None:
            return self.end_time_target
        return END_TIME_PRESETS.get(self.dataset, DEFAULT_END_TIME)

    def model_config(self, num_nodes: int) -> ModelConfig:
        return ModelConfig(self.variant, self.head, num_nodes, self.hidden_dims, self.dropout_rate)


@dataclass(eq=False)
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    best_epoch: int = 0  # 1-based
    wall_seconds: float = 0.0

    @property
    def epochs(self) -> int:
        return len(self.val_loss)

    @property
    def best_val_loss(self) -> float:
        return self.val_loss[self.best_epoch - 1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "train_loss", "val_loss", "best"])
        for i, (tl, vl) in enumerate(zip(self.train_loss, self.val_loss), start=1):
            w.writerow([i, repr(tl), repr(vl), int(i == self.best_epoch)])
        return buf.getvalue()


def _training_arrays(model: Model, samples: Sequence[Sample] | SampleArrays,
                     end_time: str = DEFAULT_END_TIME) -> tuple[np.ndarray, np.ndarray]:
    """Inputs and targets the head trains on (time targets scaled)."""
    arr = samples if isinstance(samples, SampleArrays) else stack_samples(samples, model.config.num_nodes)
    if model.config.head is Head.EVENT:
        return arr.features, arr.event_targets.astype(np.float64)
    arr = time_view(arr, end_time)
    return arr.features, arr.time_targets / model.scaling.mean_time_target


def validation_loss(model: Model, samples: Sequence[Sample] | SampleArrays,
                    end_time: str = DEFAULT_END_TIME) -> float:
    """Mean loss with dropout off (cross-entropy or scaled absolute error)."""
    xs, ys = _training_arrays(model, samples, end_time)
    return _batch_loss(model, xs, ys)


def _batch_loss(model: Model, xs: np.ndarray, ys: np.ndarray) -> float:
    if len(ys) == 0:
        raise ConfigError("validation set has no usable samples")
    out = model.network.predict_batch(xs)
    if model.config.head is Head.EVENT:
        p = out[np.arange(len(ys)), ys.astype(np.int64)]
        return float(np.mean(-np.log(np.maximum(p, PROB_FLOOR))))
    return float(np.mean(np.abs(out[:, 0] - ys)))


def train_single(model: Model, train_samples, val_samples, config: TrainConfig,
                 dataset: str | None = None) -> tuple[TrainedModel, TrainHistory]:
    """Train ``model`` in place one sample at a time; keep the best-validation parameters.

    Stops after ``max_epochs`` or after ``patience`` epochs without a new
    best validation loss. On return the model holds the best parameters.
    """
    net = model.network
    xs, ys = _training_arrays(model, train_samples, config.end_time)
    vxs, vys = _training_arrays(model, val_samples, config.end_time)
    if len(ys) == 0:
        raise ConfigError("no training samples")
    shuffle_seq, dropout_seq = np.random.SeedSequence(config.seed).spawn(2)
    shuffle_rng, dropout_rng = np.random.default_rng(shuffle_seq), np.random.default_rng(dropout_seq)
    state = AdamState.zeros_like(net.params, lr=config.lr)

    history = TrainHistory()
    best_params, best = net.params.copy(), np.inf
    t0 = time.perf_counter()
    for epoch in range(1, config.max_epochs + 1):
        order = shuffle_rng.permutation(len(ys)) if config.shuffle_each_epoch else np.arange(len(ys))
        total = 0.0
        for i in order:
            cache = net.forward(xs[i], training=True, rng=dropout_rng)
            loss = net.loss(cache, ys[i])
            if not np.isfinite(loss):
                raise NumericError(f"non-finite loss at epoch {epoch}, sample {int(i)}")
            total += loss
            net.backward(cache, ys[i])
            adam_update(net.params, net.grads, state)
        vloss = _batch_loss(model, vxs, vys)
        if not np.isfinite(vloss):
            raise NumericError(f"non-finite validation loss at epoch {epoch}")
        history.train_loss.append(total / len(ys))
        history.val_loss.append(vloss)
        if vloss < best:
            best, history.best_epoch = vloss, epoch
            best_params[:] = net.params
        log.debug("epoch %d train %.5f val %.5f", epoch, total / len(ys), vloss)
        if epoch - history.best_epoch >= config.patience:
            break
    history.wall_seconds = time.perf_counter() - t0
    net.params[:] = best_params
    trained = TrainedModel(model, history.best_epoch, best, dataset or config.dataset, config.end_time)
    return trained, history


@dataclass(eq=False)
class RunResult:
    run: int
    seed: int
    metrics: StageMetrics
    history: TrainHistory | None = None
    trained: TrainedModel | None = None


@dataclass(eq=False)
class ExperimentResult:
    config: TrainConfig
    summary: StageMetrics
    runs: list[RunResult]

    def summary_csv(self) -> str:
        return render_report({self.config.variant.value: self.summary}, self.config.dataset,
                             self.config.head.value)[1]


def run_dir(root: str | Path, config: TrainConfig, run: int) -> Path:
    return Path(root) / config.dataset / f"{config.variant.value}-{config.head.value}" / f"run-{run}"


def _one_run(log_: EventLog, train_log: EventLog, test_log: EventLog, dfg: Dfg | None,
             config: TrainConfig, run: int, out_root: str | Path | None) -> RunResult:
    seed = config.seed + run
    rdir = run_dir(out_root, config, run) if out_root is not None else None
    if rdir is not None and (rdir / "metrics.csv").exists() and (rdir / "checkpoint.npz").exists():
        metrics = next(iter(read_report_csv((rdir / "metrics.csv").read_text()).values()))
        log.info("run %d: reusing %s", run, rdir)
        return RunResult(run, seed, metrics, None, load_checkpoint(rdir / "checkpoint.npz"))

    eff_train, val = sample_validation_split(train_log, config.validation_fraction, seed)
    scaling = fit_feature_scaling(eff_train)
    model = build_model(config.model_config(log_.num_nodes), dfg, seed, scaling)
    trained, history = train_single(model, build_samples(eff_train, scaling), build_samples(val, scaling),
                                    replace(config, seed=seed))
    # test samples are only built once training is over
    metrics = evaluate(trained, build_samples(test_log, scaling))
    if rdir is not None:
        rdir.mkdir(parents=True, exist_ok=True)
        save_checkpoint(rdir / "checkpoint.npz", trained)
        (rdir / "history.csv").write_text(history.to_csv())
        (rdir / "metrics.csv").write_text(
            render_report({config.variant.value: metrics}, config.dataset, config.head.value)[1])
    log.info("run %d: best epoch %d, overall %s %.4f", run, history.best_epoch, metrics.kind, metrics.overall)
    return RunResult(run, seed, metrics, history, trained)


def run_experiment(dataset: EventLog, config: TrainConfig, n_runs: int = 5,
                   out_root: str | Path | None = None, jobs: int = 1) -> ExperimentResult:
    """Train and test ``n_runs`` times on a fixed chronological split, then aggregate.

    Run ``r`` (1-based) uses seed ``config.seed + r`` for the validation draw,
    initialization, shuffling and dropout.
    """
    if n_runs < 1:
        raise ConfigError("n_runs must be at least 1")
    train_log, test_log = chronological_case_split(dataset, config.train_fraction)
    dfg = None
    if config.variant is not Variant.MLP:
        dfg = mine_dfg(dataset if config.dfg_scope == "all" else train_log)
    args = [(dataset, train_log, test_log, dfg, config, r, out_root) for r in range(1, n_runs + 1)]
    if jobs > 1 and n_runs > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, n_runs)) as pool:
            runs = list(pool.map(_one_run_star, args))
    else:
        runs = [_one_run(*a) for a in args]
    result = ExperimentResult(config, aggregate_runs([r.metrics for r in runs]), runs)
    if out_root is not None:
        path = run_dir(out_root, config, 1).parent / "summary.csv"
        path.write_text(result.summary_csv())
    return result


def _one_run_star(args) -> RunResult:
    return _one_run(*args)
