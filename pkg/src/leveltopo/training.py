"""Desk-scale training: ring dataset, backprop, SGD/Adam, accuracy.

Everything here is deliberately small and deterministic: full-batch updates
for datasets up to 4096 points, seeded generators everywhere, and loss
history recorded at every step, so experiment sweeps can be reproduced
bitwise from their seeds.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .activations import (Activation, ActivationKind, activation_apply,
                          activation_derivative_at)
from .network import Layer, Network, scalar_output

FULL_BATCH_LIMIT = 4096
DEFAULT_MINI_BATCH = 1024
ADAM_BETA1, ADAM_BETA2, ADAM_EPS = 0.9, 0.999, 1e-8


class TrainingDiverged(RuntimeError):
    """Loss became NaN/inf; carries the finite prefix of the history."""

    def __init__(self, step: int, history: list[tuple[int, float]]):
        self.step = step
        self.history = history
        super().__init__(f"loss diverged at step {step}")


@dataclass
class Dataset:
    """Labeled points: points (N, n) float64, labels (N,) in {0, 1}."""

    points: np.ndarray
    labels: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.points.ndim != 2 or self.labels.shape != (self.points.shape[0],):
            raise ValueError(f"bad dataset shapes: {self.points.shape}, {self.labels.shape}")
        if not np.all(np.isfinite(self.points)):
            raise ValueError("dataset contains non-finite points")

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.points.min(axis=0), self.points.max(axis=0)


def gen_ring_dataset(seed: int, n_inner: int, n_ring: int, inner_sigma: float = 0.5,
                     ring_radius: float = 3.0, ring_sigma: float = 0.3) -> Dataset:
    """Two-class 2-d dataset: a Gaussian blob at the origin (label 0) inside
    an annular class (label 1).

    The ideal decision boundary is a loop around the blob, which is exactly
    the kind of bounded level component narrow networks cannot produce.
    Requires ring_radius > 3 * inner_sigma so the classes barely overlap.
    """
    if n_inner < 1 or n_ring < 1:
        raise ValueError("class counts must be >= 1")
    if not ring_radius > 3.0 * inner_sigma:
        raise ValueError(
            f"classes not separable: need ring_radius > 3*inner_sigma, "
            f"got {ring_radius} <= {3.0 * inner_sigma}")
    rng = np.random.default_rng(seed)
    inner = rng.normal(0.0, inner_sigma, size=(n_inner, 2))
    radii = rng.normal(ring_radius, ring_sigma, size=n_ring)
    angles = rng.uniform(0.0, 2.0 * math.pi, size=n_ring)
    ring = np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=1)
    points = np.concatenate([inner, ring], axis=0)
    labels = np.concatenate([np.zeros(n_inner, dtype=np.int64),
                             np.ones(n_ring, dtype=np.int64)])
    meta = {"generator": "ring", "seed": seed, "n_inner": n_inner, "n_ring": n_ring,
            "inner_sigma": inner_sigma, "ring_radius": ring_radius, "ring_sigma": ring_sigma}
    return Dataset(points, labels, meta)


def save_dataset(data: Dataset, path) -> None:
    """Write ``x1,...,xn,label`` lines plus a JSON metadata sidecar."""
    path = Path(path)
    lines = []
    for row, label in zip(data.points, data.labels):
        lines.append(",".join(repr(float(v)) for v in row) + f",{int(label)}")
    path.write_text("\n".join(lines) + "\n")
    Path(str(path) + ".meta.json").write_text(
        json.dumps(data.metadata, indent=2, sort_keys=True) + "\n")


def load_dataset(path) -> Dataset:
    path = Path(path)
    points, labels = [], []
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        cells = line.split(",")
        points.append([float(c) for c in cells[:-1]])
        labels.append(int(cells[-1]))
    sidecar = Path(str(path) + ".meta.json")
    meta = json.loads(sidecar.read_text()) if sidecar.exists() else {}
    return Dataset(np.asarray(points), np.asarray(labels), meta)


class Optimizer(enum.Enum):
    SGD = "sgd"
    ADAM = "adam"


class Loss(enum.Enum):
    BCE = "bce"
    MSE = "mse"


class Init(enum.Enum):
    UNIFORM_SCALED = "uniform_scaled"


@dataclass(frozen=True)
class TrainConfig:
    optimizer: Optimizer = Optimizer.ADAM
    learning_rate: float = 0.05
    steps: int = 5000
    batch_size: int | None = None  # None: full batch up to FULL_BATCH_LIMIT points
    seed: int = 0
    loss: Loss = Loss.BCE
    init: Init = Init.UNIFORM_SCALED
    target_loss: float = 0.05

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    def resolve_batch_size(self, n_points: int) -> int:
        if self.batch_size is not None:
            if self.batch_size > n_points:
                raise ValueError(f"batch_size {self.batch_size} exceeds dataset size {n_points}")
            return self.batch_size
        return n_points if n_points <= FULL_BATCH_LIMIT else DEFAULT_MINI_BATCH

    def to_dict(self) -> dict:
        return {"optimizer": self.optimizer.value, "learning_rate": self.learning_rate,
                "steps": self.steps, "batch_size": self.batch_size, "seed": self.seed,
                "loss": self.loss.value, "init": self.init.value,
                "target_loss": self.target_loss}

    @staticmethod
    def from_dict(d: dict) -> "TrainConfig":
        return TrainConfig(Optimizer(d["optimizer"]), d["learning_rate"], d["steps"],
                           d["batch_size"], d["seed"], Loss(d["loss"]), Init(d["init"]),
                           d["target_loss"])


def init_weights(arch: list[int], activation: Activation, seed: int,
                 final_activation: bool = True) -> Network:
    """Glorot-style init: weights uniform in [-s, s], s = sqrt(6/(fan_in+fan_out));
    biases start at zero."""
    if len(arch) < 2 or any(w < 1 for w in arch):
        raise ValueError(f"invalid architecture {arch}")
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out in zip(arch[:-1], arch[1:]):
        s = math.sqrt(6.0 / (fan_in + fan_out))
        layers.append(Layer(rng.uniform(-s, s, size=(fan_out, fan_in)), np.zeros(fan_out)))
    return Network(arch[0], tuple(layers), activation, final_activation)


def _softplus(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def _backprop(weights: list[np.ndarray], biases: list[np.ndarray], activation: Activation,
              final_activation: bool, x: np.ndarray, y_col: np.ndarray,
              loss: Loss) -> tuple[float, list[tuple[np.ndarray, np.ndarray]]]:
    """Core reverse-mode pass over raw parameter arrays (hot loop of train).

    Overflow is deliberately allowed to reach inf: a non-finite loss is the
    divergence signal ``train`` raises on.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        return _backprop_inner(weights, biases, activation, final_activation,
                               x, y_col, loss)


def _backprop_inner(weights, biases, activation, final_activation, x, y_col, loss):
    last = len(weights) - 1
    pre: list[np.ndarray] = []
    post: list[np.ndarray] = [x]
    a = x
    for i, (w, b) in enumerate(zip(weights, biases)):
        z = a @ w.T + b
        pre.append(z)
        a = activation_apply(activation, z) if (i < last or final_activation) else z
        post.append(a)

    m = x.shape[0]
    if loss is Loss.BCE:
        z_out = pre[-1]
        value = float(np.mean(_softplus(z_out) - y_col * z_out))
        delta = (post[-1] - y_col) / (m * y_col.shape[1])
    else:
        diff = post[-1] - y_col
        value = float(np.mean(diff * diff))
        d_out = 2.0 * diff / (m * y_col.shape[1])
        if final_activation:
            delta = d_out * activation_derivative_at(activation, pre[-1], post[-1])
        else:
            delta = d_out

    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(weights)
    for i in range(last, -1, -1):
        grads[i] = (delta.T @ post[i], delta.sum(axis=0))
        if i > 0:
            delta = (delta @ weights[i]) * activation_derivative_at(
                activation, pre[i - 1], post[i])
    return value, grads


def loss_and_grad(net: Network, points: np.ndarray, labels: np.ndarray,
                  loss: Loss) -> tuple[float, list[tuple[np.ndarray, np.ndarray]]]:
    """Mean loss over the batch and its exact reverse-mode gradient.

    Returns per-layer (dW, db) in layer order.  BCE is computed from the
    final pre-activation through softplus, so it stays finite even when the
    sigmoid saturates; it therefore requires a sigmoid final activation.
    """
    x = np.asarray(points, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("batch must be a non-empty (m, n) array")
    if x.shape[1] != net.input_dim:
        raise ValueError(f"batch dim {x.shape[1]} != network input dim {net.input_dim}")
    if loss is Loss.BCE and not (net.final_activation
                                 and net.activation.kind is ActivationKind.SIGMOID):
        raise ValueError("BCE requires a network with sigmoid final activation")
    return _backprop([l.weights for l in net.layers], [l.bias for l in net.layers],
                     net.activation, net.final_activation, x, y.reshape(x.shape[0], -1),
                     loss)


def train(net: Network, data: Dataset, cfg: TrainConfig) -> tuple[Network, list[tuple[int, float]]]:
    """Run the configured optimizer; stop early once loss <= target_loss.

    Deterministic for fixed (net, data, cfg): mini-batch order comes from a
    generator seeded with cfg.seed, and all arithmetic is fixed-order numpy.
    Divergence (NaN/inf loss) raises TrainingDiverged carrying the finite
    history collected so far.
    """
    if data.dim != net.input_dim:
        raise ValueError(f"dataset dim {data.dim} != network input dim {net.input_dim}")
    if cfg.loss is Loss.BCE and not (net.final_activation
                                     and net.activation.kind is ActivationKind.SIGMOID):
        raise ValueError("BCE requires a network with sigmoid final activation")
    n = len(data)
    batch = cfg.resolve_batch_size(n)
    rng = np.random.default_rng(cfg.seed)
    weights = [layer.weights.copy() for layer in net.layers]
    biases = [layer.bias.copy() for layer in net.layers]
    labels_col = data.labels.astype(np.float64).reshape(n, -1)

    if cfg.optimizer is Optimizer.ADAM:
        m_state = [(np.zeros_like(w), np.zeros_like(b)) for w, b in zip(weights, biases)]
        v_state = [(np.zeros_like(w), np.zeros_like(b)) for w, b in zip(weights, biases)]

    history: list[tuple[int, float]] = []
    order = np.arange(n)
    cursor = n  # forces a shuffle before the first mini-batch
    for step in range(1, cfg.steps + 1):
        if batch == n:
            bx, by = data.points, labels_col
        else:
            if cursor + batch > n:
                order = rng.permutation(n)
                cursor = 0
            sel = order[cursor:cursor + batch]
            cursor += batch
            bx, by = data.points[sel], labels_col[sel]

        loss_value, grads = _backprop(weights, biases, net.activation,
                                      net.final_activation, bx, by, cfg.loss)
        if not math.isfinite(loss_value):
            raise TrainingDiverged(step, history)
        history.append((step, loss_value))
        if loss_value <= cfg.target_loss:
            break

        if cfg.optimizer is Optimizer.SGD:
            for i, (dw, db) in enumerate(grads):
                weights[i] = weights[i] - cfg.learning_rate * dw
                biases[i] = biases[i] - cfg.learning_rate * db
        else:
            c1 = 1.0 - ADAM_BETA1 ** step
            c2 = 1.0 - ADAM_BETA2 ** step
            for i, (dw, db) in enumerate(grads):
                mw, mb = m_state[i]
                vw, vb = v_state[i]
                mw = ADAM_BETA1 * mw + (1.0 - ADAM_BETA1) * dw
                mb = ADAM_BETA1 * mb + (1.0 - ADAM_BETA1) * db
                vw = ADAM_BETA2 * vw + (1.0 - ADAM_BETA2) * dw * dw
                vb = ADAM_BETA2 * vb + (1.0 - ADAM_BETA2) * db * db
                m_state[i] = (mw, mb)
                v_state[i] = (vw, vb)
                weights[i] = weights[i] - cfg.learning_rate * (mw / c1) / (np.sqrt(vw / c2) + ADAM_EPS)
                biases[i] = biases[i] - cfg.learning_rate * (mb / c1) / (np.sqrt(vb / c2) + ADAM_EPS)

    trained = Network(net.input_dim, tuple(Layer(w, b) for w, b in zip(weights, biases)),
                      net.activation, net.final_activation)
    return trained, history


def accuracy(net: Network, data: Dataset, threshold: float = 0.5) -> float:
    """Fraction of points whose thresholded output matches the label."""
    outputs = scalar_output(net, data.points)
    predicted = outputs >= threshold
    return float(np.mean(predicted == (data.labels == 1)))
