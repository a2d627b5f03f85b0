"""Small dense / graph-convolution network with hand-written backprop and Adam.

Only what the predictors need: an optional graph-convolution layer with a
``4 x 1`` weight, a stack of dense layers, inverted dropout, softmax
cross-entropy and absolute-error losses, and a bias-corrected Adam step.
All trainable tensors are views into one flat parameter vector so the
optimizer and checkpointing work on a single array.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LabelError, NumericError, ParameterError, ShapeError

ACTIVATIONS = ("tanh", "relu", "linear", "softmax")
PROB_FLOOR = 1e-12


def softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def activate(z: np.ndarray, name: str) -> np.ndarray:
    if name == "tanh":
        return np.tanh(z)
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "linear":
        return z
    if name == "softmax":
        return softmax(z)
    raise ParameterError(f"unknown activation {name!r}")


def activation_derivative(z: np.ndarray, a: np.ndarray, name: str) -> np.ndarray:
    """Elementwise derivative; ``a`` is ``activate(z, name)``."""
    if name == "tanh":
        return 1.0 - a * a
    if name == "relu":
        return (z > 0).astype(z.dtype)
    if name == "linear":
        return np.ones_like(z)
    raise ParameterError(f"no elementwise derivative for {name!r}")


@dataclass(eq=False)
class DenseLayer:
    weights: np.ndarray  # (out_dim, in_dim)
    bias: np.ndarray     # (out_dim,)
    activation: str = "linear"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ParameterError(f"unknown activation {self.activation!r}")
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[0],):
            raise ShapeError(f"weights {self.weights.shape} and bias {self.bias.shape} do not match")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass(eq=False)
class GcnLayer:
    propagation: np.ndarray  # (num_nodes, num_nodes), fixed
    weight: np.ndarray       # (4, 1), trainable
    activation: str = "tanh"

    def __post_init__(self):
        if self.weight.shape != (4, 1):
            raise ShapeError(f"GCN weight must be 4x1, got {self.weight.shape}")
        p = self.propagation
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ShapeError(f"propagation matrix must be square, got {p.shape}")

    @property
    def num_nodes(self) -> int:
        return self.propagation.shape[0]


def gcn_forward(x: np.ndarray, layer: GcnLayer) -> np.ndarray:
    """``activation(P X W)`` flattened to a ``num_nodes`` vector."""
    if x.shape != (layer.num_nodes, layer.weight.shape[0]):
        raise ShapeError(f"features {x.shape} incompatible with {layer.num_nodes} nodes")
    return activate((layer.propagation @ x @ layer.weight)[:, 0], layer.activation)


def dense_forward(v: np.ndarray, layer: DenseLayer) -> np.ndarray:
    if v.shape != (layer.in_dim,):
        raise ShapeError(f"input of length {v.shape} for layer with in_dim {layer.in_dim}")
    return activate(layer.weights @ v + layer.bias, layer.activation)


def dropout_mask(size: int, rate: float, rng: np.random.Generator) -> np.ndarray:
    if not 0 <= rate < 1:
        raise ParameterError(f"dropout rate must lie in [0, 1), got {rate}")
    if rate == 0:
        return np.ones(size)
    return (rng.random(size) >= rate) / (1.0 - rate)


def dropout(v: np.ndarray, rate: float, training: bool, rng: np.random.Generator | None = None) -> np.ndarray:
    """Inverted dropout: survivors are scaled by ``1 / (1 - rate)``; identity at inference."""
    if not 0 <= rate < 1:
        raise ParameterError(f"dropout rate must lie in [0, 1), got {rate}")
    if not training or rate == 0:
        return v
    if rng is None:
        raise ParameterError("training-mode dropout needs a generator")
    return v * dropout_mask(v.size, rate, rng).reshape(v.shape)


def compute_loss(prediction, target, mode: str) -> float:
    """Cross-entropy of a probability vector, or absolute error of a scalar."""
    if mode == "cross_entropy":
        p = np.asarray(prediction)
        if not 0 <= int(target) < p.shape[-1]:
            raise LabelError(f"target {target} outside {p.shape[-1]} classes")
        return float(-np.log(max(p[int(target)], PROB_FLOOR)))
    if mode == "absolute_error":
        return float(abs(np.asarray(prediction).reshape(-1)[0] - target))
    raise ParameterError(f"unknown loss {mode!r}")


@dataclass(eq=False)
class ForwardCache:
    x: np.ndarray
    px: np.ndarray | None = None        # P @ X
    gcn_out: np.ndarray | None = None   # tanh(P X w)
    inputs: list = field(default_factory=list)   # input to each dense layer (after dropout)
    pre_dropout: dict = field(default_factory=dict)
    masks: dict = field(default_factory=dict)
    zs: list = field(default_factory=list)
    acts: list = field(default_factory=list)

    @property
    def output(self) -> np.ndarray:
        return self.acts[-1]


class Network:
    """Optional GCN layer followed by dense layers, parameters in one flat buffer.

    ``dropout_sites`` lists indices of dense layers whose *input* is passed
    through dropout during training.
    """

    def __init__(self, layer_dims: list[int], activations: list[str], *,
                 propagation: np.ndarray | None = None, dropout_rate: float = 0.0,
                 dropout_sites: tuple[int, ...] = ()):
        if len(activations) != len(layer_dims) - 1:
            raise ShapeError("need one activation per dense layer")
        if "softmax" in activations[:-1]:
            raise ParameterError("softmax is only allowed on the last layer")
        if not 0 <= dropout_rate < 1:
            raise ParameterError(f"dropout rate must lie in [0, 1), got {dropout_rate}")
        self.dropout_rate = dropout_rate
        self.dropout_sites = tuple(dropout_sites)

        shapes: list[tuple[int, ...]] = []
        if propagation is not None:
            shapes.append((4, 1))
        for i, o in zip(layer_dims[:-1], layer_dims[1:]):
            shapes += [(o, i), (o,)]
        sizes = [int(np.prod(s)) for s in shapes]
        self.params = np.zeros(sum(sizes))
        self.grads = np.zeros_like(self.params)
        self.shapes = shapes

        pviews, gviews, off = [], [], 0
        for s, n in zip(shapes, sizes):
            pviews.append(self.params[off:off + n].reshape(s))
            gviews.append(self.grads[off:off + n].reshape(s))
            off += n

        self.gcn: GcnLayer | None = None
        self._gcn_grad = None
        if propagation is not None:
            self.gcn = GcnLayer(np.asarray(propagation, dtype=np.float64), pviews.pop(0))
            self._gcn_grad = gviews.pop(0)
        self.layers = [
            DenseLayer(pviews[2 * k], pviews[2 * k + 1], act) for k, act in enumerate(activations)
        ]
        self._dense_grads = [(gviews[2 * k], gviews[2 * k + 1]) for k in range(len(activations))]
        if self.gcn is not None and self.layers[0].in_dim != self.gcn.num_nodes:
            raise ShapeError("first dense layer must take num_nodes inputs after the GCN layer")

    @property
    def n_params(self) -> int:
        return self.params.size

    @property
    def output_activation(self) -> str:
        return self.layers[-1].activation

    def param_views(self) -> list[np.ndarray]:
        views = [self.gcn.weight] if self.gcn is not None else []
        for layer in self.layers:
            views += [layer.weights, layer.bias]
        return views

    def grad_views(self) -> list[np.ndarray]:
        views = [self._gcn_grad] if self.gcn is not None else []
        for gw, gb in self._dense_grads:
            views += [gw, gb]
        return views

    def init_params(self, rng: np.random.Generator) -> None:
        """Glorot-uniform weights, zero biases."""
        self.params[:] = 0.0
        if self.gcn is not None:
            lim = np.sqrt(6.0 / (4 + 1))
            self.gcn.weight[:] = rng.uniform(-lim, lim, size=(4, 1))
        for layer in self.layers:
            lim = np.sqrt(6.0 / (layer.in_dim + layer.out_dim))
            layer.weights[:] = rng.uniform(-lim, lim, size=layer.weights.shape)

    # single-sample path (training)

    def forward(self, x: np.ndarray, training: bool = False, rng: np.random.Generator | None = None) -> ForwardCache:
        cache = ForwardCache(x=x)
        if self.gcn is not None:
            if x.shape != (self.gcn.num_nodes, 4):
                raise ShapeError(f"features {x.shape} incompatible with {self.gcn.num_nodes} nodes")
            cache.px = self.gcn.propagation @ x
            cache.gcn_out = np.tanh(cache.px @ self.gcn.weight[:, 0])
            a = cache.gcn_out
        else:
            a = x.reshape(-1)
            if a.size != self.layers[0].in_dim:
                raise ShapeError(f"flattened input of size {a.size}, expected {self.layers[0].in_dim}")
        use_dropout = training and self.dropout_rate > 0
        for k, layer in enumerate(self.layers):
            if use_dropout and k in self.dropout_sites:
                mask = dropout_mask(a.size, self.dropout_rate, rng)
                cache.pre_dropout[k] = a
                cache.masks[k] = mask
                a = a * mask
            cache.inputs.append(a)
            z = layer.weights @ a + layer.bias
            a = activate(z, layer.activation)
            cache.zs.append(z)
            cache.acts.append(a)
        return cache

    def output_delta(self, cache: ForwardCache, target: float) -> np.ndarray:
        """d loss / d (last pre-activation) for the loss paired with the output activation."""
        out = cache.output
        if self.output_activation == "softmax":
            t = int(target)
            if not 0 <= t < out.size:
                raise LabelError(f"target {t} outside {out.size} classes")
            delta = out.copy()
            delta[t] -= 1.0
            return delta
        # absolute error on the (single) linear/relu output
        z = cache.zs[-1]
        return np.sign(out - target) * activation_derivative(z, out, self.output_activation)

    def loss(self, cache: ForwardCache, target: float) -> float:
        if self.output_activation == "softmax":
            return compute_loss(cache.output, target, "cross_entropy")
        return compute_loss(cache.output, target, "absolute_error")

    def backward(self, cache: ForwardCache, target: float) -> np.ndarray:
        """Fill ``self.grads`` with the gradient of the sample loss and return it."""
        delta = self.output_delta(cache, target)
        n = len(self.layers)
        for k in range(n - 1, -1, -1):
            layer = self.layers[k]
            gw, gb = self._dense_grads[k]
            np.outer(delta, cache.inputs[k], out=gw)
            gb[:] = delta
            if k == 0 and self.gcn is None:
                break
            da = layer.weights.T @ delta
            if k in cache.masks:
                da = da * cache.masks[k]
            if k == 0:
                dpre = da * (1.0 - cache.gcn_out * cache.gcn_out)
                self._gcn_grad[:, 0] = cache.px.T @ dpre
                break
            prev = self.layers[k - 1]
            delta = da * activation_derivative(cache.zs[k - 1], cache.acts[k - 1], prev.activation)
        return self.grads

    # batched path (inference only, no dropout)

    def predict_batch(self, xs: np.ndarray) -> np.ndarray:
        """Outputs for a stack of feature matrices ``(B, num_nodes, 4)``."""
        if self.gcn is not None:
            px = np.einsum("ij,bjk->bik", self.gcn.propagation, xs)
            a = np.tanh(px @ self.gcn.weight[:, 0])
        else:
            a = xs.reshape(xs.shape[0], -1)
        for layer in self.layers:
            a = activate(a @ layer.weights.T + layer.bias, layer.activation)
        return a


@dataclass(eq=False)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0

    @classmethod
    def zeros_like(cls, params: np.ndarray, lr: float = 1e-3, **kw) -> AdamState:
        return cls(np.zeros_like(params), np.zeros_like(params), lr, **kw)


def adam_update(params: np.ndarray, grads: np.ndarray, state: AdamState) -> np.ndarray:
    """One in-place Adam step on ``params``; returns ``params``."""
    if params.shape != grads.shape or state.m.shape != params.shape:
        raise ShapeError("parameter, gradient and moment shapes differ")
    if not np.isfinite(grads).all():
        bad = np.flatnonzero(~np.isfinite(grads))
        raise NumericError(f"non-finite gradient at {bad.size} entries (first index {bad[0]})")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    state.m *= b1
    state.m += (1.0 - b1) * grads
    state.v *= b2
    state.v += (1.0 - b2) * grads * grads
    m_hat = state.m / (1.0 - b1 ** state.t)
    v_hat = state.v / (1.0 - b2 ** state.t)
    params -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params
