"""The five predictor variants and their checkpoint format."""
from __future__ import annotations

import enum
import json
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dfg import Dfg, PropagationKind, propagation_matrix
from .errors import ConfigError, UsageError
from .features import FeatureScaling
from .nn import Network

CHECKPOINT_VERSION = 1


class Variant(str, enum.Enum):
    GCN_W = "gcn-w"
    GCN_B = "gcn-b"
    GCN_LB = "gcn-lb"
    GCN_LW = "gcn-lw"
    MLP = "mlp"

    @property
    def propagation_kind(self) -> PropagationKind | None:
        return _KIND[self]

    def __str__(self) -> str:
        return self.value


_KIND = {
    Variant.GCN_W: PropagationKind.WEIGHTED,
    Variant.GCN_B: PropagationKind.BINARY,
    Variant.GCN_LW: PropagationKind.LAPLACIAN_WEIGHTED,
    Variant.GCN_LB: PropagationKind.LAPLACIAN_BINARY,
    Variant.MLP: None,
}


class Head(str, enum.Enum):
    EVENT = "event"
    TIME = "time"

    def __str__(self) -> str:
        return self.value


HEAD_ACTIVATIONS = {
    Head.EVENT: ["tanh", "tanh", "softmax"],
    Head.TIME: ["relu", "relu", "linear"],
}


@dataclass(frozen=True)
class ModelConfig:
    variant: Variant
    head: Head
    num_nodes: int
    hidden_dims: tuple[int, int] = (64, 32)
    dropout_rate: float = 0.2

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "head", Head(self.head))
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        if len(self.hidden_dims) != 2 or min(self.hidden_dims) < 1:
            raise ConfigError(f"hidden_dims must be two positive ints, got {self.hidden_dims}")
        if self.num_nodes < 1:
            raise ConfigError("num_nodes must be positive")

    @property
    def output_dim(self) -> int:
        return self.num_nodes + 1 if self.head is Head.EVENT else 1

    @property
    def input_dim(self) -> int:
        return self.num_nodes * 4 if self.variant is Variant.MLP else self.num_nodes

    def layer_dims(self) -> list[int]:
        return [self.input_dim, *self.hidden_dims, self.output_dim]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["variant"], d["head"] = self.variant.value, self.head.value
        d["hidden_dims"] = list(self.hidden_dims)
        return d


@dataclass(eq=False)
class Model:
    config: ModelConfig
    network: Network
    propagation: np.ndarray | None = None
    scaling: FeatureScaling = field(default_factory=FeatureScaling)
    seed: int = 0

    @property
    def n_params(self) -> int:
        return self.network.n_params


def expected_param_count(config: ModelConfig) -> int:
    dims = config.layer_dims()
    n = sum(i * o + o for i, o in zip(dims[:-1], dims[1:]))
    return n + (0 if config.variant is Variant.MLP else 4)


def _network(config: ModelConfig, propagation: np.ndarray | None) -> Network:
    n_dense = 3
    if config.variant is Variant.MLP:
        sites: tuple[int, ...] = (n_dense - 1,)
    else:
        sites = (0, n_dense - 1)
    return Network(config.layer_dims(), HEAD_ACTIVATIONS[config.head], propagation=propagation,
                   dropout_rate=config.dropout_rate, dropout_sites=sites)


def build_model(config: ModelConfig, dfg: Dfg | None = None, seed: int = 0,
                scaling: FeatureScaling | None = None) -> Model:
    kind = config.variant.propagation_kind
    if kind is None:
        if dfg is not None:
            warnings.warn("MLP ignores the supplied DFG", stacklevel=2)
        prop = None
    else:
        if dfg is None:
            raise ConfigError(f"variant {config.variant} needs a DFG")
        if dfg.num_nodes != config.num_nodes:
            raise ConfigError(f"DFG has {dfg.num_nodes} nodes, config says {config.num_nodes}")
        prop = propagation_matrix(dfg, kind).matrix
    net = _network(config, prop)
    net.init_params(np.random.default_rng(seed))
    return Model(config, net, prop, scaling or FeatureScaling(), seed)


def predict_event(model: Model, features: np.ndarray, training: bool = False,
                  rng: np.random.Generator | None = None) -> np.ndarray:
    """Probability vector over ``num_nodes + 1`` classes (the last is end of case)."""
    if model.config.head is not Head.EVENT:
        raise UsageError("predict_event needs an event-head model")
    return model.network.forward(features, training, rng).output


def predict_time(model: Model, features: np.ndarray, training: bool = False,
                 rng: np.random.Generator | None = None) -> float:
    """Seconds until the next event, clamped at zero."""
    if model.config.head is not Head.TIME:
        raise UsageError("predict_time needs a time-head model")
    out = model.network.forward(features, training, rng).output[0]
    return max(0.0, float(out) * model.scaling.mean_time_target)


def predict_event_batch(model: Model, xs: np.ndarray) -> np.ndarray:
    if model.config.head is not Head.EVENT:
        raise UsageError("predict_event_batch needs an event-head model")
    return model.network.predict_batch(xs)


def predict_time_batch(model: Model, xs: np.ndarray) -> np.ndarray:
    if model.config.head is not Head.TIME:
        raise UsageError("predict_time_batch needs a time-head model")
    return np.maximum(model.network.predict_batch(xs)[:, 0] * model.scaling.mean_time_target, 0.0)


@dataclass(eq=False)
class TrainedModel:
    """Best-validation parameters of one training run."""

    model: Model
    best_epoch: int
    best_val_loss: float
    dataset: str = "custom"
    end_time_target: str = "exclude"


def save_checkpoint(path: str | Path, trained: TrainedModel) -> None:
    m = trained.model
    meta = {
        "version": CHECKPOINT_VERSION,
        "config": m.config.to_dict(),
        "scaling": asdict(m.scaling),
        "seed": m.seed,
        "best_epoch": trained.best_epoch,
        "best_val_loss": trained.best_val_loss,
        "dataset": trained.dataset,
        "end_time_target": trained.end_time_target,
    }
    arrays = {"params": m.network.params, "meta": np.array(json.dumps(meta))}
    if m.propagation is not None:
        arrays["propagation"] = m.propagation
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path: str | Path) -> TrainedModel:
    with np.load(path, allow_pickle=False) as z:
        meta = json.loads(str(z["meta"]))
        if meta.get("version") != CHECKPOINT_VERSION:
            raise ConfigError(f"unsupported checkpoint version {meta.get('version')}")
        params = z["params"].copy()
        prop = z["propagation"].copy() if "propagation" in z.files else None
    config = ModelConfig(**meta["config"])
    net = _network(config, prop)
    if params.shape != net.params.shape:
        raise ConfigError("checkpoint parameter count does not match its config")
    net.params[:] = params
    model = Model(config, net, prop, FeatureScaling(**meta["scaling"]), meta["seed"])
    return TrainedModel(model, meta["best_epoch"], meta["best_val_loss"], meta.get("dataset", "custom"),
                        meta.get("end_time_target", "exclude"))
