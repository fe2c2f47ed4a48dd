"""Reference learner: a small rectifier MLP with a softmax head, trained by Adam.

Weights are Glorot-uniform initialised, training is full batch on the mean
cross-entropy, and :func:`train_to_fit` stops as soon as every training
example is classified correctly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyTrainingSet, InvalidArchitecture, InvalidLayer, ShapeMismatch


@dataclass(frozen=True)
class AdamConfig:
    lr: float = 2e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def validate(self):
        if not self.lr > 0:
            raise ValueError(f"adam lr must be > 0, got {self.lr}")
        for name in ("beta1", "beta2"):
            b = getattr(self, name)
            if not 0 <= b < 1:
                raise ValueError(f"adam {name} must lie in [0, 1), got {b}")
        if not self.epsilon > 0:
            raise ValueError("adam epsilon must be > 0")
        return self


@dataclass
class ModelState:
    """Weights, biases and Adam accumulators.

    ``weights[i]`` has shape ``(layer_sizes[i], layer_sizes[i + 1])``. The
    parameter order used by gradients and the moment buffers is
    ``[W0, b0, W1, b1, ...]``.
    """

    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)
    t: int = 0

    @property
    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    @property
    def n_hidden(self) -> int:
        return len(self.layer_sizes) - 2

    def copy(self) -> "ModelState":
        return ModelState(
            self.layer_sizes,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            [a.copy() for a in self.m],
            [a.copy() for a in self.v],
            self.t,
        )


def glorot_bound(fan_in: int, fan_out: int) -> float:
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


def init_weights(layer_sizes, seed: int) -> ModelState:
    """Fresh Glorot-uniform weights, zero biases, zeroed Adam state."""
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 2 or any(s <= 0 for s in sizes):
        raise InvalidArchitecture(f"need >= 2 positive layer sizes, got {layer_sizes}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        b = glorot_bound(fan_in, fan_out)
        weights.append(rng.uniform(-b, b, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    state = ModelState(sizes, weights, biases)
    state.m = [np.zeros_like(p) for p in state.params]
    state.v = [np.zeros_like(p) for p in state.params]
    return state


def adam_step(state: ModelState, gradients, cfg: AdamConfig) -> ModelState:
    """Apply one bias-corrected Adam update; returns a new state."""
    params = state.params
    if len(gradients) != len(params):
        raise ShapeMismatch(f"expected {len(params)} gradient arrays, got {len(gradients)}")
    for p, g in zip(params, gradients):
        if np.shape(g) != p.shape:
            raise ShapeMismatch(f"gradient shape {np.shape(g)} does not match parameter {p.shape}")

    t = state.t + 1
    b1, b2 = cfg.beta1, cfg.beta2
    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, gradients, state.m, state.v):
        g = np.asarray(g, dtype=np.float64)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1 ** t)
        v_hat = v / (1 - b2 ** t)
        new_params.append(p - cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.epsilon))
        new_m.append(m)
        new_v.append(v)
    return ModelState(state.layer_sizes, new_params[0::2], new_params[1::2], new_m, new_v, t)


# -- forward / backward ----------------------------------------------------

def _as_batch(state, x):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != state.layer_sizes[0]:
        raise ShapeMismatch(f"input of shape {x.shape[1:]} for input layer {state.layer_sizes[0]}")
    return x, single


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _forward(state, x):
    """Return (list of post-activation hidden outputs, logits)."""
    hidden = []
    h = x
    last = len(state.weights) - 1
    for i, (w, b) in enumerate(zip(state.weights, state.biases)):
        z = h @ w + b
        if i == last:
            return hidden, z
        h = np.maximum(z, 0.0)
        hidden.append(h)
    raise AssertionError("unreachable")


def predict_proba(state: ModelState, x) -> np.ndarray:
    """Class probabilities for one vector ``(d,)`` or a batch ``(n, d)``."""
    xb, single = _as_batch(state, x)
    _, logits = _forward(state, xb)
    p = softmax(logits)
    return p[0] if single else p


def predict(state: ModelState, x) -> np.ndarray:
    return np.argmax(predict_proba(state, x), axis=-1)


def extract_features(state: ModelState, x, layer: int) -> np.ndarray:
    """Post-rectifier activations of hidden layer ``layer`` (0-based)."""
    if not 0 <= layer < state.n_hidden:
        raise InvalidLayer(f"layer {layer} is not a hidden layer (model has {state.n_hidden})")
    xb, single = _as_batch(state, x)
    h = xb
    for w, b in zip(state.weights[: layer + 1], state.biases[: layer + 1]):
        h = np.maximum(h @ w + b, 0.0)
    return h[0] if single else h


def loss_and_gradients(state: ModelState, x, y) -> tuple[float, list[np.ndarray]]:
    """Mean cross-entropy of the batch and its gradient w.r.t. ``state.params``."""
    loss, grads, _ = _backprop(state, x, y)
    return loss, grads


def _backprop(state, x, y):
    x, _ = _as_batch(state, x)
    y = np.asarray(y, dtype=np.int64)
    n = len(x)
    hidden, logits = _forward(state, x)
    z = logits - logits.max(axis=1, keepdims=True)
    log_p = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    loss = float(-log_p[np.arange(n), y].mean())
    n_correct = int(np.sum(np.argmax(logits, axis=1) == y))

    delta = np.exp(log_p)
    delta[np.arange(n), y] -= 1.0
    delta /= n
    inputs = [x] + hidden
    grads = [None] * (2 * len(state.weights))
    for i in range(len(state.weights) - 1, -1, -1):
        grads[2 * i] = inputs[i].T @ delta
        grads[2 * i + 1] = delta.sum(axis=0)
        if i:
            delta = (delta @ state.weights[i].T) * (hidden[i - 1] > 0)
    return loss, grads, n_correct


def accuracy(state: ModelState, x, y) -> float:
    y = np.asarray(y)
    if len(y) == 0:
        return float("nan")
    return float(np.mean(predict(state, x) == y))


def train_to_fit(state: ModelState, x, y, cfg: AdamConfig, max_epochs: int,
                 loss_history: list | None = None) -> tuple[ModelState, bool]:
    """Full-batch Adam until training accuracy hits 1.0 or ``max_epochs`` runs out.

    Returns ``(final_state, fitted)``. Accuracy is checked before every
    update, so an initialisation that already separates the data is
    returned untouched. Pass a list as ``loss_history`` to collect the loss
    of each epoch.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(y) == 0:
        raise EmptyTrainingSet("cannot train on an empty labeled set")
    if x.ndim != 2 or len(x) != len(y):
        raise ShapeMismatch(f"{len(x)} inputs vs {len(y)} labels")
    n_classes = state.layer_sizes[-1]
    if y.min() < 0 or y.max() >= n_classes:
        raise ValueError(f"labels must lie in [0, {n_classes})")

    for _ in range(max_epochs):
        loss, grads, n_correct = _backprop(state, x, y)
        if loss_history is not None:
            loss_history.append(loss)
        if n_correct == len(y):
            return state, True
        state = adam_step(state, grads, cfg)
    return state, accuracy(state, x, y) == 1.0
