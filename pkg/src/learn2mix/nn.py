"""Minimal dense networks with analytic gradients and Adam.

Float64 everywhere: the certification harness and the gradient checks need
tight tolerances, and these nets are small enough that speed is not a
concern. Nets are value-like; optimizer steps return new nets rather than
mutating in place.

Supported loss kinds:
  mse            per-sample squared error averaged over output dims;
                 pairs with an identity (or relu) output layer.
  cross_entropy  one-hot targets against a softmax head, computed via
                 log-sum-exp.
  focal          class-level focal reweighting of cross-entropy: with
                 ce_i the mean cross-entropy of class i inside the batch,
                 the loss is (1/k) sum_i omega_i (1 - exp(-ce_i))^G ce_i.
                 G=0 and omega=1 reduce it to the macro-average of
                 class-mean cross-entropies.

The softmax activation is only supported as the final layer, paired with
cross_entropy or focal.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from ._streams import DOMAIN_NET_INIT, stream
from .errors import DimensionMismatch, InvalidSize, NonFiniteLoss

RELU = "relu"
IDENTITY = "identity"
SOFTMAX = "softmax"
_ACTIVATIONS = (IDENTITY, RELU, SOFTMAX)


@dataclass(frozen=True)
class Layer:
    weights: np.ndarray  # (fan_out, fan_in)
    bias: np.ndarray  # (fan_out,)
    activation: str

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
            raise DimensionMismatch(f"layer shapes {w.shape} / {b.shape} inconsistent")
        if self.activation not in _ACTIVATIONS:
            raise InvalidSize(f"unknown activation {self.activation!r}")
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise NonFiniteLoss("layer parameters must be finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)


@dataclass(frozen=True)
class DenseNet:
    layers: tuple[Layer, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise InvalidSize("net needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if nxt.weights.shape[1] != prev.weights.shape[0]:
                raise DimensionMismatch(
                    f"layer chain broken: {prev.weights.shape[0]} -> {nxt.weights.shape[1]}"
                )
        for layer in layers[:-1]:
            if layer.activation == SOFTMAX:
                raise InvalidSize("softmax is only supported on the final layer")
        object.__setattr__(self, "layers", layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].weights.shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weights.shape[0]

    @property
    def num_params(self) -> int:
        return sum(l.weights.size + l.bias.size for l in self.layers)


@dataclass(frozen=True)
class LossKind:
    """Loss selector; `focal` carries its class weights and focus exponent."""

    name: str
    omega: np.ndarray | None = None
    focus: float = 0.0

    def __post_init__(self):
        if self.name not in ("mse", "cross_entropy", "focal"):
            raise InvalidSize(f"unknown loss kind {self.name!r}")
        if self.name == "focal":
            if self.omega is None:
                raise InvalidSize("focal loss requires class weights omega")
            omega = np.asarray(self.omega, dtype=np.float64)
            if (omega <= 0).any():
                raise InvalidSize("focal weights must be positive")
            if self.focus < 0:
                raise InvalidSize("focal focus exponent must be >= 0")
            object.__setattr__(self, "omega", omega)

    @staticmethod
    def mse() -> "LossKind":
        return LossKind("mse")

    @staticmethod
    def cross_entropy() -> "LossKind":
        return LossKind("cross_entropy")

    @staticmethod
    def focal(omega, focus: float = 2.0) -> "LossKind":
        return LossKind("focal", omega=omega, focus=focus)


def init_dense(dims: Sequence[int], activations: Sequence[str], seed: int) -> DenseNet:
    """Build a net with uniform [-1/sqrt(fan_in), +1/sqrt(fan_in)] init.

    dims is the size chain (d, h1, ..., k_out); activations has one entry
    per layer. All draws come from the (seed, net-init) stream: weights
    then bias, layer by layer.
    """
    dims = [int(x) for x in dims]
    if len(dims) < 2 or len(activations) != len(dims) - 1:
        raise InvalidSize("need len(dims) >= 2 and one activation per layer")
    rng = stream(seed, DOMAIN_NET_INIT)
    layers = []
    for fan_in, fan_out, act in zip(dims, dims[1:], activations):
        bound = 1.0 / np.sqrt(fan_in)
        w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        b = rng.uniform(-bound, bound, size=fan_out)
        layers.append(Layer(w, b, act))
    return DenseNet(tuple(layers))


def regression_net(d: int, seed: int, hidden: int = 64) -> DenseNet:
    """The regression architecture: d -> hidden (relu) -> 1 (identity)."""
    return init_dense([d, hidden, 1], [RELU, IDENTITY], seed)


def classification_net(d: int, k: int, seed: int, hidden: int = 64) -> DenseNet:
    """Classification variant: d -> hidden (relu) -> k logits + softmax."""
    return init_dense([d, hidden, k], [RELU, SOFTMAX], seed)


def _apply_activation(z: np.ndarray, act: str) -> np.ndarray:
    if act == IDENTITY:
        return z
    if act == RELU:
        return np.maximum(z, 0.0)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _forward_trace(net: DenseNet, X: np.ndarray):
    """Forward pass keeping activations and pre-activations for backprop."""
    acts = [X]
    pres = []
    a = X
    for layer in net.layers:
        z = a @ layer.weights.T + layer.bias
        pres.append(z)
        a = _apply_activation(z, layer.activation)
        acts.append(a)
    return acts, pres


def forward(net: DenseNet, x: np.ndarray) -> np.ndarray:
    """Evaluate the net on one sample (d,) or a batch (n, d)."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.ndim != 2 or X.shape[1] != net.input_dim:
        raise DimensionMismatch(
            f"input has dim {x.shape[-1] if x.ndim else 0}, net expects {net.input_dim}"
        )
    acts, _ = _forward_trace(net, X)
    out = acts[-1]
    return out[0] if single else out


def _as_batch_arrays(batch) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(batch, tuple) and len(batch) == 2:
        X, Y = batch
        return np.asarray(X, dtype=np.float64), np.asarray(Y, dtype=np.float64)
    xs, ys = zip(*batch)
    return np.stack(xs).astype(np.float64), np.stack(ys).astype(np.float64)


def _check_batch_dims(net: DenseNet, X: np.ndarray, Y: np.ndarray):
    if X.ndim != 2 or X.shape[1] != net.input_dim:
        raise DimensionMismatch(f"batch features {X.shape} vs input dim {net.input_dim}")
    if Y.ndim != 2 or Y.shape[1] != net.output_dim:
        raise DimensionMismatch(f"batch labels {Y.shape} vs output dim {net.output_dim}")
    if X.shape[0] != Y.shape[0] or X.shape[0] == 0:
        raise DimensionMismatch("batch must be nonempty with matching X/Y rows")


def _logsumexp(z: np.ndarray) -> np.ndarray:
    m = z.max(axis=1, keepdims=True)
    return (m + np.log(np.exp(z - m).sum(axis=1, keepdims=True)))[:, 0]


def _cross_entropy_per_sample(z: np.ndarray, Y: np.ndarray) -> np.ndarray:
    return _logsumexp(z) - (z * Y).sum(axis=1)


def _focal_factors(class_ce: np.ndarray, focus: float):
    """g(z) = (1 - exp(-z))^G * z and its derivative, elementwise on z >= 0."""
    z = class_ce
    if focus == 0.0:
        return z.copy(), np.ones_like(z)
    u = -np.expm1(-z)  # 1 - exp(-z), accurate near 0
    g = u**focus * z
    dg = np.zeros_like(z)
    pos = u > 0.0
    zp, up = z[pos], u[pos]
    dg[pos] = focus * np.exp(-zp) * up ** (focus - 1.0) * zp + up**focus
    return g, dg


def loss_and_grad(net: DenseNet, batch, kind: LossKind):
    """Mean batch loss and its exact analytic gradient w.r.t. all parameters.

    Returns (loss, grads) where grads is a list of (dW, db) per layer.
    """
    X, Y = _as_batch_arrays(batch)
    _check_batch_dims(net, X, Y)
    n = X.shape[0]
    acts, pres = _forward_trace(net, X)
    head = net.layers[-1].activation

    if kind.name == "mse":
        if head == SOFTMAX:
            raise InvalidSize("mse loss does not pair with a softmax head")
        pred = acts[-1]
        diff = pred - Y
        loss = float((diff**2).mean())
        # d(mean over samples and dims)/d pred
        delta_out = 2.0 * diff / diff.size
        delta = _activation_backward(delta_out, pres[-1], head)
    else:
        if head != SOFTMAX:
            raise InvalidSize(f"{kind.name} loss requires a softmax head")
        z = pres[-1]
        ce = _cross_entropy_per_sample(z, Y)
        p = _apply_activation(z, SOFTMAX)
        if kind.name == "cross_entropy":
            loss = float(ce.mean())
            delta = (p - Y) / n
        else:
            k = net.output_dim
            if kind.omega.shape[0] != k:
                raise DimensionMismatch(f"focal omega has {kind.omega.shape[0]} entries, need {k}")
            cls = np.argmax(Y, axis=1)
            counts = np.bincount(cls, minlength=k).astype(np.float64)
            present = counts > 0
            class_ce = np.zeros(k)
            np.add.at(class_ce, cls, ce)
            class_ce[present] /= counts[present]
            g, dg = _focal_factors(class_ce, kind.focus)
            loss = float((kind.omega[present] * g[present]).sum() / k)
            sample_w = (kind.omega[cls] * dg[cls]) / (k * counts[cls])
            delta = sample_w[:, None] * (p - Y)

    if not np.isfinite(loss):
        raise NonFiniteLoss(f"batch loss is {loss}")
    grads = _backprop(net, acts, pres, delta)
    return loss, grads


def _activation_backward(delta_a: np.ndarray, z: np.ndarray, act: str) -> np.ndarray:
    if act == IDENTITY:
        return delta_a
    if act == RELU:
        return delta_a * (z > 0.0)
    raise InvalidSize("softmax backward is fused into its loss")


def _backprop(net: DenseNet, acts, pres, delta_last):
    """delta_last is dLoss/d(final pre-activation); walk the chain backward."""
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(net.layers)
    delta = delta_last
    for li in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[li]
        grads[li] = (delta.T @ acts[li], delta.sum(axis=0))
        if li:
            delta = _activation_backward(delta @ layer.weights, pres[li - 1],
                                         net.layers[li - 1].activation)
    for dw, db in grads:
        if not (np.isfinite(dw).all() and np.isfinite(db).all()):
            raise NonFiniteLoss("gradient overflowed")
    return grads


def per_sample_losses(net: DenseNet, batch, kind: LossKind) -> np.ndarray:
    """Per-sample loss vector, no gradient.

    For the class-level focal kind this returns its cross-entropy core:
    focal couples samples within a class, so a per-sample focal value is
    not defined; the cross-entropy core is what class-wise reporting and
    importance weights use.
    """
    X, Y = _as_batch_arrays(batch)
    _check_batch_dims(net, X, Y)
    acts, pres = _forward_trace(net, X)
    if kind.name == "mse":
        if net.layers[-1].activation == SOFTMAX:
            raise InvalidSize("mse loss does not pair with a softmax head")
        return ((acts[-1] - Y) ** 2).mean(axis=1)
    if net.layers[-1].activation != SOFTMAX:
        raise InvalidSize(f"{kind.name} loss requires a softmax head")
    return _cross_entropy_per_sample(pres[-1], Y)


def true_class_probabilities(net: DenseNet, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Predicted probability of each sample's true (argmax-label) class."""
    out = forward(net, X)
    return out[np.arange(out.shape[0]), np.argmax(Y, axis=1)]


@dataclass(frozen=True)
class AdamState:
    """Bias-corrected Adam moments, one (m_W, m_b) pair per layer."""

    m: tuple[tuple[np.ndarray, np.ndarray], ...]
    v: tuple[tuple[np.ndarray, np.ndarray], ...]
    step: int
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @staticmethod
    def init(net: DenseNet, learning_rate: float) -> "AdamState":
        if learning_rate <= 0:
            raise InvalidSize(f"learning rate must be > 0, got {learning_rate}")
        zeros = lambda: tuple(
            (np.zeros_like(l.weights), np.zeros_like(l.bias)) for l in net.layers
        )
        return AdamState(m=zeros(), v=zeros(), step=0, learning_rate=learning_rate)


def adam_step(net: DenseNet, grads, state: AdamState):
    """One standard bias-corrected Adam update. Returns (net', state')."""
    t = state.step + 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    new_layers, new_m, new_v = [], [], []
    for layer, (gw, gb), (mw, mb), (vw, vb) in zip(net.layers, grads, state.m, state.v):
        mw = b1 * mw + (1 - b1) * gw
        mb = b1 * mb + (1 - b1) * gb
        vw = b2 * vw + (1 - b2) * gw**2
        vb = b2 * vb + (1 - b2) * gb**2
        w = layer.weights - state.learning_rate * (mw / c1) / (np.sqrt(vw / c2) + state.eps)
        b = layer.bias - state.learning_rate * (mb / c1) / (np.sqrt(vb / c2) + state.eps)
        new_layers.append(Layer(w, b, layer.activation))
        new_m.append((mw, mb))
        new_v.append((vw, vb))
    return DenseNet(tuple(new_layers)), replace(
        state, m=tuple(new_m), v=tuple(new_v), step=t
    )


def sgd_step(net: DenseNet, grads, eta: float) -> DenseNet:
    """Plain gradient step theta <- theta - eta * grad."""
    return DenseNet(
        tuple(
            Layer(l.weights - eta * gw, l.bias - eta * gb, l.activation)
            for l, (gw, gb) in zip(net.layers, grads)
        )
    )


_MAGIC = b"L2MX"
_ACT_CODES = {IDENTITY: 0, RELU: 1, SOFTMAX: 2}
_LOSS_CODES = {"mse": 0, "cross_entropy": 1, "focal": 2}


def save_checkpoint(net: DenseNet, path: str | Path, kind: LossKind | None = None) -> None:
    """Write the binary checkpoint format (see README for the layout)."""
    parts = [_MAGIC, struct.pack("<II", 1, len(net.layers))]
    for layer in net.layers:
        parts.append(
            struct.pack(
                "<IIB",
                layer.weights.shape[1],
                layer.weights.shape[0],
                _ACT_CODES[layer.activation],
            )
        )
    if kind is None:
        parts.append(struct.pack("<B", 255))
    else:
        parts.append(struct.pack("<B", _LOSS_CODES[kind.name]))
        if kind.name == "focal":
            parts.append(struct.pack("<dI", kind.focus, kind.omega.shape[0]))
            parts.append(np.ascontiguousarray(kind.omega, dtype="<f8").tobytes())
    for layer in net.layers:
        parts.append(np.ascontiguousarray(layer.weights, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(layer.bias, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_checkpoint(path: str | Path) -> tuple[DenseNet, LossKind | None]:
    """Read a checkpoint written by save_checkpoint."""
    blob = Path(path).read_bytes()
    if blob[:4] != _MAGIC:
        raise InvalidSize("not a checkpoint file (bad magic)")
    off = 4
    version, n_layers = struct.unpack_from("<II", blob, off)
    off += 8
    if version != 1:
        raise InvalidSize(f"unsupported checkpoint version {version}")
    shapes = []
    act_names = {v: k for k, v in _ACT_CODES.items()}
    for _ in range(n_layers):
        fan_in, fan_out, act = struct.unpack_from("<IIB", blob, off)
        off += 9
        shapes.append((fan_in, fan_out, act_names[act]))
    (loss_code,) = struct.unpack_from("<B", blob, off)
    off += 1
    kind = None
    if loss_code != 255:
        name = {v: k for k, v in _LOSS_CODES.items()}[loss_code]
        if name == "focal":
            focus, k = struct.unpack_from("<dI", blob, off)
            off += 12
            omega = np.frombuffer(blob, dtype="<f8", count=k, offset=off).copy()
            off += 8 * k
            kind = LossKind.focal(omega, focus)
        else:
            kind = LossKind(name)
    layers = []
    for fan_in, fan_out, act in shapes:
        w = np.frombuffer(blob, dtype="<f8", count=fan_in * fan_out, offset=off)
        off += 8 * fan_in * fan_out
        b = np.frombuffer(blob, dtype="<f8", count=fan_out, offset=off)
        off += 8 * fan_out
        layers.append(Layer(w.reshape(fan_out, fan_in).copy(), b.copy(), act))
    return DenseNet(tuple(layers)), kind
