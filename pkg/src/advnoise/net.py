"""Small fully-connected probabilistic classifiers with exact gradients.

The model is a plain MLP over float64 arrays. Reverse-mode gradients are
written out by hand for both parameters and inputs so that attack code and
training code share one exact, finite-difference-checkable backward pass.
Temperature enters only through :func:`softmax_t`; training against soft
targets always happens at the temperature already baked into the target.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import ParameterError, ShapeError
from .linalg import Rng, matmul, require_finite

PROB_FLOOR = 1e-30
CHECKPOINT_VERSION = 1

_ACTIVATIONS = ("relu", "tanh")


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture: input width, hidden widths, class count, nonlinearity."""

    input_dim: int
    hidden: tuple[int, ...]
    classes: int
    activation: str = "relu"

    def __post_init__(self):
        if self.input_dim < 1:
            raise ParameterError(f"input_dim must be >= 1, got {self.input_dim}")
        if self.classes < 2:
            raise ParameterError(f"classes must be >= 2, got {self.classes}")
        if any(h < 1 for h in self.hidden):
            raise ParameterError(f"all hidden widths must be >= 1, got {self.hidden}")
        if self.activation not in _ACTIVATIONS:
            raise ParameterError(f"activation must be one of {_ACTIVATIONS}")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))

    @property
    def layer_dims(self) -> list[int]:
        return [self.input_dim, *self.hidden, self.classes]


@dataclass
class GradBundle:
    """Gradients of the soft-target cross-entropy, mirroring network shapes."""

    weight_grads: list[np.ndarray]
    bias_grads: list[np.ndarray]
    input_grad: np.ndarray


class Network:
    """MLP with per-layer weight matrices (fan_out x fan_in) and bias vectors."""

    def __init__(self, spec: NetworkSpec, weights: list[np.ndarray], biases: list[np.ndarray]):
        dims = spec.layer_dims
        if len(weights) != len(dims) - 1 or len(biases) != len(dims) - 1:
            raise ShapeError("layer count does not match spec")
        for i, (w, b) in enumerate(zip(weights, biases)):
            if w.shape != (dims[i + 1], dims[i]) or b.shape != (dims[i + 1],):
                raise ShapeError(f"layer {i}: expected {(dims[i + 1], dims[i])}, got {w.shape}")
        self.spec = spec
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]

    @classmethod
    def init(cls, spec: NetworkSpec, rng: Rng) -> "Network":
        """Symmetric uniform(+-sqrt(6/(fan_in+fan_out))) init, seeded."""
        weights, biases = [], []
        dims = spec.layer_dims
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.gen.uniform(-limit, limit, size=(fan_out, fan_in)))
            biases.append(np.zeros(fan_out))
        return cls(spec, weights, biases)

    def copy(self) -> "Network":
        return Network(self.spec, [w.copy() for w in self.weights], [b.copy() for b in self.biases])

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def _activate(self, pre: np.ndarray) -> np.ndarray:
        if self.spec.activation == "relu":
            return np.maximum(pre, 0.0)
        return np.tanh(pre)

    def _activate_grad(self, pre: np.ndarray) -> np.ndarray:
        if self.spec.activation == "relu":
            return (pre > 0.0).astype(np.float64)
        t = np.tanh(pre)
        return 1.0 - t * t

    def forward_batch(self, x: np.ndarray) -> np.ndarray:
        """Logits for a batch of rows, shape (n, classes)."""
        return self._forward_cached(x)[-1][0]

    def _forward_cached(self, x: np.ndarray):
        """All (pre-activation, activation) pairs, input first, logits last."""
        x = linalg.as_matrix(x)
        if x.shape[1] != self.spec.input_dim:
            raise ShapeError(f"input width {x.shape[1]} != spec input_dim {self.spec.input_dim}")
        cache = [(x, x)]
        h = x
        for i in range(self.n_layers):
            pre = matmul(h, self.weights[i].T) + self.biases[i]
            h = self._activate(pre) if i < self.n_layers - 1 else pre
            cache.append((pre, h))
        require_finite(h, "logits")
        return cache


def forward(net: Network, x: np.ndarray) -> np.ndarray:
    """Logits for a single input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError(f"expected a 1-D input, got ndim={x.ndim}")
    return net.forward_batch(x[None, :])[0]


def softmax_t(logits: np.ndarray, temperature: float = 1.0) -> np.ndarray:
    """Temperature-scaled softmax, stabilized by max subtraction.

    Scaling never changes the argmax; temperature -> inf flattens toward the
    uniform distribution and temperature -> 0 sharpens toward one-hot.
    """
    if temperature <= 0:
        raise ParameterError(f"temperature must be > 0, got {temperature}")
    z = np.asarray(logits, dtype=np.float64) / temperature
    z = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def loss_soft_ce(probs: np.ndarray, target: np.ndarray) -> float:
    """Cross-entropy -sum(target * log probs) with a 1e-30 floor under the log."""
    probs = np.asarray(probs, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if probs.shape != target.shape:
        raise ShapeError(f"probs {probs.shape} vs target {target.shape}")
    return float(-np.sum(target * np.log(np.maximum(probs, PROB_FLOOR))))


def _ce_rows(probs: np.ndarray, targets: np.ndarray) -> np.ndarray:
    return -np.sum(targets * np.log(np.maximum(probs, PROB_FLOOR)), axis=1)


def batch_loss_and_grads(
    net: Network,
    x: np.ndarray,
    targets: np.ndarray,
    temperature: float = 1.0,
    want_param_grads: bool = True,
):
    """Per-example CE losses plus exact gradients of their SUM.

    Returns (losses, weight_grads, bias_grads, input_grads). The input-grad
    rows are each example's own loss gradient, which is what attack steps
    consume; training divides the parameter grads by the batch size itself.
    Setting want_param_grads=False skips the parameter products inside
    attack loops.
    """
    if temperature <= 0:
        raise ParameterError(f"temperature must be > 0, got {temperature}")
    targets = linalg.as_matrix(targets)
    cache = net._forward_cached(x)
    logits = cache[-1][1]
    if targets.shape != logits.shape:
        raise ShapeError(f"targets {targets.shape} vs logits {logits.shape}")
    probs = softmax_t(logits, temperature)
    losses = _ce_rows(probs, targets)

    # d(loss)/d(logits): (probs - targets)/T away from the probability floor;
    # clamped coordinates drop out of the log and contribute zero.
    if np.all(probs > PROB_FLOOR):
        dz = (probs - targets) / temperature
    else:
        g = np.where(probs > PROB_FLOOR, -targets / np.maximum(probs, PROB_FLOOR), 0.0)
        inner = np.sum(g * probs, axis=1, keepdims=True)
        dz = probs * (g - inner) / temperature

    weight_grads: list[np.ndarray] | None = [None] * net.n_layers if want_param_grads else None
    bias_grads: list[np.ndarray] | None = [None] * net.n_layers if want_param_grads else None
    delta = dz
    for i in reversed(range(net.n_layers)):
        h_prev = cache[i][1]
        if want_param_grads:
            weight_grads[i] = matmul(delta.T, h_prev)
            bias_grads[i] = matmul(delta.T, np.ones((delta.shape[0], 1)))[:, 0]
        delta = matmul(delta, net.weights[i])
        if i > 0:
            delta = delta * net._activate_grad(cache[i][0])
    return losses, weight_grads, bias_grads, delta


def backward(net: Network, x: np.ndarray, target: np.ndarray, temperature: float = 1.0) -> GradBundle:
    """Exact gradients of loss_soft_ce(softmax_t(forward(x), T), target)."""
    x = np.asarray(x, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    _, wg, bg, xg = batch_loss_and_grads(net, x[None, :], target[None, :], temperature)
    return GradBundle(weight_grads=wg, bias_grads=bg, input_grad=xg[0])


def save_checkpoint(net: Network, path) -> None:
    """Versioned binary dump of spec + parameters; round-trips bit-exactly."""
    spec = net.spec
    payload = {
        "version": np.array(CHECKPOINT_VERSION),
        "spec_json": np.frombuffer(
            json.dumps(
                {
                    "input_dim": spec.input_dim,
                    "hidden": list(spec.hidden),
                    "classes": spec.classes,
                    "activation": spec.activation,
                }
            ).encode("utf-8"),
            dtype=np.uint8,
        ),
    }
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        payload[f"w{i}"] = w
        payload[f"b{i}"] = b
    with open(path, "wb") as fh:
        np.savez(fh, **payload)


def load_checkpoint(path) -> Network:
    with np.load(path) as data:
        version = int(data["version"])
        if version != CHECKPOINT_VERSION:
            raise ParameterError(f"unsupported checkpoint version {version}")
        raw = bytes(data["spec_json"].tobytes()).decode("utf-8")
        meta = json.loads(raw)
        spec = NetworkSpec(
            input_dim=int(meta["input_dim"]),
            hidden=tuple(int(h) for h in meta["hidden"]),
            classes=int(meta["classes"]),
            activation=str(meta["activation"]),
        )
        n = len(spec.layer_dims) - 1
        weights = [data[f"w{i}"] for i in range(n)]
        biases = [data[f"b{i}"] for i in range(n)]
    return Network(spec, weights, biases)
