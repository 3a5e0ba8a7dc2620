"""Small dense networks with smooth activations, exact gradients and training.

A network is a stack of dense hidden layers followed by a linear scalar
readout::

    f(x) = w · σ(W_L σ(... σ(W_1 x)))

Each row of a hidden weight matrix is the incoming weight vector θᵢ of one
neuron. Biases are modelled as a constant-1 input feature (see
:meth:`Dataset.with_bias`), so every neuron is fully described by θᵢ and its
outgoing weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidInputError, NeuronNotFoundError

MAX_DEPTH = 3
MAX_WIDTH = 256
LOSS_KINDS = ("mse", "bce")


# -- activations -------------------------------------------------------------


@dataclass(frozen=True)
class Activation:
    """A smooth scalar nonlinearity together with its first two derivatives."""

    name: str
    fn: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]] = field(repr=False)
    slope_fn: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]] = field(repr=False)
    lipschitz: float = field(repr=False)

    def __call__(self, t):
        return self.fn(np.asarray(t, dtype=float))[0]

    def evaluate(self, t):
        """Return ``(σ(t), σ′(t), σ″(t))``."""
        return self.fn(np.asarray(t, dtype=float))

    def value_and_slope(self, t):
        """Return ``(σ(t), σ′(t))`` without the second derivative."""
        return self.slope_fn(t)


def _rbf(t):
    s = np.exp(-0.5 * t * t)
    return s, -t * s, (t * t - 1.0) * s


def _rbf_slope(t):
    s = np.exp(-0.5 * t * t)
    return s, -t * s


def _tanh(t):
    s = np.tanh(t)
    ds = 1.0 - s * s
    return s, ds, -2.0 * s * ds


def _tanh_slope(t):
    s = np.tanh(t)
    return s, 1.0 - s * s


def _softplus(t):
    p = sigmoid(t)
    return np.logaddexp(0.0, t), p, p * (1.0 - p)


def _softplus_slope(t):
    return np.logaddexp(0.0, t), sigmoid(t)


def sigmoid(t):
    # tanh form avoids overflow in exp for large |t|
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(t, dtype=float)))


ACTIVATIONS = {
    "rbf": Activation("rbf", _rbf, _rbf_slope, lipschitz=float(np.exp(-0.5))),
    "tanh": Activation("tanh", _tanh, _tanh_slope, lipschitz=1.0),
    "softplus": Activation("softplus", _softplus, _softplus_slope, lipschitz=1.0),
}


def get_activation(name: str) -> Activation:
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise InvalidInputError(
            f"unknown activation {name!r}; expected one of {sorted(ACTIVATIONS)}"
        ) from None


# -- data --------------------------------------------------------------------


@dataclass(frozen=True)
class Dataset:
    """Full-batch training data: ``inputs`` is n×d, ``targets`` has length n."""

    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        x = np.array(self.inputs, dtype=float)
        y = np.array(self.targets, dtype=float).reshape(-1)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise InvalidInputError(f"inputs must be a non-empty n×d matrix, got shape {x.shape}")
        if y.shape[0] != x.shape[0]:
            raise InvalidInputError(f"{x.shape[0]} inputs but {y.shape[0]} targets")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise InvalidInputError("dataset contains non-finite values")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "targets", y)

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def d(self) -> int:
        return self.inputs.shape[1]

    @property
    def is_binary(self) -> bool:
        return bool(np.all((self.targets == 0.0) | (self.targets == 1.0)))

    def with_bias(self) -> Dataset:
        """Append a constant-1 feature column."""
        return Dataset(np.hstack([self.inputs, np.ones((self.n, 1))]), self.targets)


# -- network -----------------------------------------------------------------


def default_ids(layer: int, width: int) -> tuple[str, ...]:
    return tuple(f"h{layer}_{i}" for i in range(width))


@dataclass(frozen=True)
class MlpNetwork:
    """Dense network with per-neuron ids that survive splitting.

    ``layers[k]`` has shape (width_k, fan_in_k); ``output_weights`` has one
    entry per neuron of the last hidden layer.
    """

    activation: Activation
    loss_kind: str
    layers: tuple[np.ndarray, ...]
    output_weights: np.ndarray
    ids: tuple[tuple[str, ...], ...] = None

    def __post_init__(self):
        if isinstance(self.activation, str):
            object.__setattr__(self, "activation", get_activation(self.activation))
        if self.loss_kind not in LOSS_KINDS:
            raise InvalidInputError(f"loss must be one of {LOSS_KINDS}, got {self.loss_kind!r}")
        layers = tuple(np.array(w, dtype=float, ndmin=2) for w in self.layers)
        out = np.array(self.output_weights, dtype=float).reshape(-1)
        if not 1 <= len(layers) <= MAX_DEPTH:
            raise InvalidInputError(f"depth must be in [1, {MAX_DEPTH}], got {len(layers)}")
        for k, w in enumerate(layers):
            if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
                raise InvalidInputError(f"layer {k} has invalid shape {w.shape}")
            if k > 0 and w.shape[1] != layers[k - 1].shape[0]:
                raise InvalidInputError(
                    f"layer {k} fan-in {w.shape[1]} != width {layers[k - 1].shape[0]} of layer {k - 1}"
                )
            if not np.all(np.isfinite(w)):
                raise InvalidInputError(f"layer {k} has non-finite weights")
        if out.shape[0] != layers[-1].shape[0]:
            raise InvalidInputError(
                f"{out.shape[0]} output weights for a last layer of width {layers[-1].shape[0]}"
            )
        if not np.all(np.isfinite(out)):
            raise InvalidInputError("output weights are non-finite")
        ids = self.ids
        if ids is None:
            ids = tuple(default_ids(k, w.shape[0]) for k, w in enumerate(layers))
        ids = tuple(tuple(str(i) for i in row) for row in ids)
        if len(ids) != len(layers) or any(len(r) != w.shape[0] for r, w in zip(ids, layers)):
            raise InvalidInputError("neuron ids do not match layer widths")
        flat = [i for row in ids for i in row]
        if len(set(flat)) != len(flat):
            raise InvalidInputError("neuron ids must be unique")
        for w in layers:
            w.setflags(write=False)
        out.setflags(write=False)
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "output_weights", out)
        object.__setattr__(self, "ids", ids)

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].shape[1]

    @property
    def neuron_count(self) -> int:
        return sum(w.shape[0] for w in self.layers)

    @property
    def neuron_ids(self) -> list[str]:
        return [i for row in self.ids for i in row]

    def locate(self, neuron: str) -> tuple[int, int]:
        """Return ``(layer, index)`` of a neuron id."""
        for k, row in enumerate(self.ids):
            if neuron in row:
                return k, row.index(neuron)
        raise NeuronNotFoundError(f"no neuron with id {neuron!r}")

    def outgoing(self, layer: int, index: int) -> np.ndarray:
        """Outgoing weights of a neuron: a scalar readout weight or a column."""
        if layer == self.depth - 1:
            return self.output_weights[index : index + 1]
        return self.layers[layer + 1][:, index]


def single_layer(activation, weights, output_weights, loss_kind: str = "mse", ids=None) -> MlpNetwork:
    """Convenience constructor for one-hidden-layer networks."""
    return MlpNetwork(
        activation=activation,
        loss_kind=loss_kind,
        layers=(np.array(weights, dtype=float, ndmin=2),),
        output_weights=output_weights,
        ids=None if ids is None else (tuple(ids),),
    )


def random_network(
    rng: np.random.Generator,
    input_dim: int,
    widths: Sequence[int],
    activation="tanh",
    loss_kind: str = "mse",
    scale: float = 1.0,
) -> MlpNetwork:
    layers = []
    fan_in = input_dim
    for width in widths:
        layers.append(scale * rng.standard_normal((width, fan_in)))
        fan_in = width
    return MlpNetwork(
        activation=activation,
        loss_kind=loss_kind,
        layers=tuple(layers),
        output_weights=scale * rng.standard_normal(fan_in),
    )


# -- evaluation --------------------------------------------------------------


def _check_inputs(net: MlpNetwork, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != net.input_dim:
        raise InvalidInputError(f"input has {x.shape[-1]} features, network expects {net.input_dim}")
    return x


def _forward_pass(net: MlpNetwork, x: np.ndarray):
    """Return pre-activations, activations (``acts[0]`` is the input) and outputs."""
    return _forward_raw(net.activation, net.layers, net.output_weights, x)


def _forward_raw(act: Activation, layers, out, x):
    acts = [x]
    pre = []
    a = x
    for w in layers:
        h = a @ w.T
        a = act(h)
        pre.append(h)
        acts.append(a)
    return pre, acts, a @ out


def predict(net: MlpNetwork, inputs) -> np.ndarray:
    """Network outputs for an n×d batch."""
    x = _check_inputs(net, np.atleast_2d(inputs))
    return _forward_pass(net, x)[2]


def forward(net: MlpNetwork, x) -> float:
    """Network output for a single input vector."""
    x = np.asarray(x, dtype=float).reshape(-1)
    return float(predict(net, x[None, :])[0])


def _loss_terms(kind: str, f: np.ndarray, y: np.ndarray):
    """Per-sample loss values Φ(f) and derivatives Φ′(f)."""
    if kind == "mse":
        e = f - y
        return 0.5 * e * e, e
    return np.logaddexp(0.0, f) - y * f, sigmoid(f) - y


def _check_data(net: MlpNetwork, data: Dataset):
    if data.n == 0:
        raise InvalidInputError("empty dataset")
    if data.d != net.input_dim:
        raise InvalidInputError(f"dataset has {data.d} features, network expects {net.input_dim}")


def loss(net: MlpNetwork, data: Dataset) -> float:
    """Mean loss; MSE carries the ½ factor."""
    _check_data(net, data)
    f = _forward_pass(net, data.inputs)[2]
    return float(np.mean(_loss_terms(net.loss_kind, f, data.targets)[0]))


def residuals(net: MlpNetwork, data: Dataset) -> np.ndarray:
    """Per-sample Φ′(f): f − y for MSE, p(f) − y for cross-entropy."""
    _check_data(net, data)
    f = _forward_pass(net, data.inputs)[2]
    return _loss_terms(net.loss_kind, f, data.targets)[1]


@dataclass(frozen=True)
class ParamGrad:
    """Gradient with the same layout as the network's weights."""

    layers: tuple[np.ndarray, ...]
    output_weights: np.ndarray

    def flat(self) -> np.ndarray:
        return np.concatenate([g.ravel() for g in self.layers] + [self.output_weights])


def _loss_and_grad(net: MlpNetwork, x: np.ndarray, y: np.ndarray):
    return _loss_and_grad_raw(net.activation, net.loss_kind, net.layers, net.output_weights, x, y)


def _loss_and_grad_raw(act: Activation, kind: str, layers, out, x, y):
    n = x.shape[0]
    acts = [x]
    slopes = []
    a = x
    for w in layers:
        a, ds = act.value_and_slope(a @ w.T)
        acts.append(a)
        slopes.append(ds)
    phi, dphi = _loss_terms(kind, a @ out, y)
    g_f = dphi / n
    g_out = acts[-1].T @ g_f
    grads = [None] * len(layers)
    # row-broadcast first; a column broadcast of g_f is several times slower
    g_h = slopes[-1] * out
    g_h *= g_f[:, None]
    for k in range(len(layers) - 1, -1, -1):
        grads[k] = g_h.T @ acts[k]
        if k:
            g_h = (g_h @ layers[k]) * slopes[k - 1]
    return float(np.mean(phi)), grads, g_out


def grad_params(net: MlpNetwork, data: Dataset) -> ParamGrad:
    """Exact gradient of :func:`loss` with respect to every weight."""
    _check_data(net, data)
    _, g_layers, g_out = _loss_and_grad(net, data.inputs, data.targets)
    return ParamGrad(g_layers, g_out)


@dataclass(frozen=True)
class NeuronSignals:
    """Per-sample quantities seen by one neuron.

    ``z`` (n×fan_in) is the neuron's input, ``h`` its pre-activation θᵢᵀz and
    ``dfdsigma`` the sensitivity of the network output to its post-activation.
    """

    z: np.ndarray
    h: np.ndarray
    dfdsigma: np.ndarray


def neuron_signals(net: MlpNetwork, data: Dataset, neuron: str) -> NeuronSignals:
    layer, index = net.locate(neuron)
    _check_data(net, data)
    pre, acts, _ = _forward_pass(net, data.inputs)
    # reverse sweep of ∂f/∂a from the readout down to the neuron's layer
    g_a = np.broadcast_to(net.output_weights, acts[-1].shape)
    for k in range(net.depth - 1, layer, -1):
        g_h = g_a * net.activation.value_and_slope(pre[k])[1]
        g_a = g_h @ net.layers[k]
    return NeuronSignals(
        z=acts[layer].copy(),
        h=pre[layer][:, index].copy(),
        dfdsigma=np.array(g_a[:, index]),
    )


def likelihood(net: MlpNetwork, data: Dataset) -> float:
    """Mean probability assigned to the observed binary labels."""
    if net.loss_kind != "bce":
        raise InvalidInputError("likelihood requires a cross-entropy network")
    if not data.is_binary:
        raise InvalidInputError("likelihood requires targets in {0, 1}")
    p = sigmoid(predict(net, data.inputs))
    y = data.targets
    return float(np.mean(p * y + (1.0 - p) * (1.0 - y)))


# -- training ----------------------------------------------------------------


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "adam"
    lr: float = 0.005
    steps: int = 1000
    seed: int = 0
    freeze_output_weights: bool = False
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.kind not in ("gd", "adam"):
            raise InvalidInputError(f"optimizer kind must be 'gd' or 'adam', got {self.kind!r}")
        if not self.lr > 0:
            raise InvalidInputError(f"learning rate must be positive, got {self.lr}")
        if self.steps < 0:
            raise InvalidInputError(f"steps must be >= 0, got {self.steps}")


def parametric_train(
    net: MlpNetwork, data: Dataset, cfg: OptimizerConfig
) -> tuple[MlpNetwork, list[float]]:
    """Full-batch training; returns the trained network and the loss trace.

    The trace holds the loss before every step plus the final loss, so it has
    ``cfg.steps + 1`` entries. Full-batch updates involve no randomness; the
    seed is accepted so that configurations stay uniform across optimizers.
    """
    _check_data(net, data)
    x, y = data.inputs, data.targets
    params = [w.copy() for w in net.layers] + [net.output_weights.copy()]
    trainable = len(params) - 1 if cfg.freeze_output_weights else len(params)
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    b1, b2 = cfg.beta1, cfg.beta2
    trace = []
    act, kind = net.activation, net.loss_kind
    for step in range(cfg.steps):
        value, grads, g_out = _loss_and_grad_raw(act, kind, params[:-1], params[-1], x, y)
        trace.append(value)
        grads.append(g_out)
        if cfg.kind == "gd":
            for k in range(trainable):
                params[k] -= cfg.lr * grads[k]
        else:
            c1 = 1.0 - b1 ** (step + 1)
            c2 = 1.0 - b2 ** (step + 1)
            for k in range(trainable):
                g = grads[k]
                m[k] = b1 * m[k] + (1.0 - b1) * g
                v[k] = b2 * v[k] + (1.0 - b2) * g * g
                params[k] -= cfg.lr * (m[k] / c1) / (np.sqrt(v[k] / c2) + cfg.eps)
    trained = with_weights(net, layers=params[:-1], output_weights=params[-1])
    trace.append(loss(trained, data))
    return trained, trace


def with_weights(net: MlpNetwork, layers=None, output_weights=None, ids=None) -> MlpNetwork:
    """Validated copy of ``net`` with some weight blocks replaced."""
    return replace(
        net,
        layers=net.layers if layers is None else tuple(layers),
        output_weights=net.output_weights if output_weights is None else output_weights,
        ids=net.ids if ids is None else ids,
    )
