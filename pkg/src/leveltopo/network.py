"""Feed-forward network representation: forward pass, trunk/head split, JSON IO.

Networks are immutable once built (weight arrays are marked read-only), so
forward evaluation is a pure function and instances can be shared freely
across threads or worker processes.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .activations import Activation, activation_apply


@dataclass(frozen=True)
class Layer:
    """One affine map: ``z = weights @ a + bias`` with weights (n_out, n_in)."""

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        b = np.array(self.bias, dtype=np.float64)
        if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
            raise ValueError(f"bad layer shapes: weights {w.shape}, bias {b.shape}")
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def n_in(self) -> int:
        return self.weights.shape[1]

    @property
    def n_out(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class Network:
    """Layered fully-connected network.

    The activation is applied after every layer; whether it is also applied
    after the last layer is controlled by ``final_activation`` (a sigmoid
    classifier head wants it on, a raw affine read-out wants it off).
    """

    input_dim: int
    layers: tuple[Layer, ...]
    activation: Activation
    final_activation: bool = True

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValueError("network needs at least one layer")
        prev = self.input_dim
        for i, layer in enumerate(layers):
            if layer.n_in != prev:
                raise ValueError(
                    f"layer {i} expects input dim {layer.n_in}, previous width is {prev}")
            prev = layer.n_out
        object.__setattr__(self, "layers", layers)

    @property
    def output_dim(self) -> int:
        return self.layers[-1].n_out

    @property
    def widths(self) -> tuple[int, ...]:
        """(input_dim, hidden widths..., output_dim)."""
        return (self.input_dim,) + tuple(layer.n_out for layer in self.layers)

    @property
    def hidden_widths(self) -> tuple[int, ...]:
        return tuple(layer.n_out for layer in self.layers[:-1])

    # the analysis code treats networks as evaluatable maps
    @property
    def in_dim(self) -> int:
        return self.input_dim

    @property
    def out_dim(self) -> int:
        return self.output_dim

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return forward_batch(self, x)


def _affine_batch(a: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Affine map with elementwise accumulation instead of a matmul.

    Each output column is built by the same left-to-right sum regardless of
    batch size or matrix shape, so (a) a single point and a batch row give
    bitwise-identical results, and (b) zero-padding a network appends terms
    that are exactly 0.0 and leaves the original values untouched.  BLAS
    kernels guarantee neither.
    """
    out = np.empty((a.shape[0], weights.shape[0]), dtype=np.float64)
    for j in range(weights.shape[0]):
        acc = a[:, 0] * weights[j, 0]
        for k in range(1, weights.shape[1]):
            acc = acc + a[:, k] * weights[j, k]
        out[:, j] = acc + bias[j]
    return out


def forward_batch(net: Network, x: np.ndarray) -> np.ndarray:
    """Evaluate ``net`` on a batch of points, shape (m, input_dim) -> (m, output_dim)."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != net.input_dim:
        raise ValueError(f"expected batch of shape (m, {net.input_dim}), got {a.shape}")
    last = len(net.layers) - 1
    for i, layer in enumerate(net.layers):
        z = _affine_batch(a, layer.weights, layer.bias)
        if i < last or net.final_activation:
            a = activation_apply(net.activation, z)
        else:
            a = z
    return a


def forward(net: Network, x) -> np.ndarray:
    """Evaluate ``net`` on a single point, shape (input_dim,) -> (output_dim,).

    Implemented through the batch path so single and batched evaluation run
    bitwise-identical arithmetic.
    """
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != net.input_dim:
        raise ValueError(f"expected point of shape ({net.input_dim},), got {v.shape}")
    return forward_batch(net, v[None, :])[0]


def scalar_output(net: Network, x: np.ndarray) -> np.ndarray:
    """Batch evaluation of a scalar-valued network, (m, n) -> (m,)."""
    if net.output_dim != 1:
        raise ValueError(f"expected scalar output, network has output_dim {net.output_dim}")
    return forward_batch(net, x)[:, 0]


def decompose(net: Network) -> tuple[Network, Network]:
    """Split into (trunk, head): trunk = all but the last layer, head = the last.

    The trunk keeps the activation after every one of its layers (they are
    hidden layers of the original network), so
    ``forward(head, forward(trunk, x)) == forward(net, x)`` bitwise: the two
    paths perform the identical sequence of floating-point operations.
    """
    if len(net.layers) < 2:
        raise ValueError("decompose needs at least 2 layers; a single-layer network has no trunk")
    trunk = Network(net.input_dim, net.layers[:-1], net.activation, final_activation=True)
    head = Network(trunk.output_dim, net.layers[-1:], net.activation,
                   final_activation=net.final_activation)
    return trunk, head


@dataclass(frozen=True)
class Window:
    """Axis-aligned compact box: the domain on which fields are sampled."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lo, dtype=np.float64)
        hi = np.array(self.hi, dtype=np.float64)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError(f"lo/hi must be 1-d and matching, got {lo.shape} vs {hi.shape}")
        if not np.all(lo < hi):
            raise ValueError(f"window needs lo < hi per axis, got lo={lo}, hi={hi}")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def extent(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.extent))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def scaled(self, factor: float) -> "Window":
        """Box with the same center and ``factor`` times the extent."""
        c, half = self.center, 0.5 * self.extent * factor
        return Window(c - half, c + half)

    def boundary_distance(self, points: np.ndarray) -> np.ndarray:
        """Distance from each point (m, dim) to the nearest face of the box."""
        p = np.atleast_2d(np.asarray(points, dtype=np.float64))
        gaps = np.minimum(p - self.lo, self.hi - p)
        return np.min(gaps, axis=1)

    def to_dict(self) -> dict:
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist()}

    @staticmethod
    def from_dict(d: dict) -> "Window":
        return Window(np.asarray(d["lo"]), np.asarray(d["hi"]))


FORMAT_VERSION = 1


def network_to_dict(net: Network) -> dict:
    """Plain-dict form of a network (row-major weights, full-precision floats)."""
    return {
        "format_version": FORMAT_VERSION,
        "input_dim": net.input_dim,
        "layers": [
            {"weights": layer.weights.tolist(), "bias": layer.bias.tolist()}
            for layer in net.layers
        ],
        "activation": net.activation.to_dict(),
        "final_activation": net.final_activation,
    }


def network_from_dict(d: dict) -> Network:
    if d.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported network format_version: {d.get('format_version')!r}")
    layers = tuple(
        Layer(np.asarray(spec["weights"], dtype=np.float64),
              np.asarray(spec["bias"], dtype=np.float64))
        for spec in d["layers"]
    )
    return Network(d["input_dim"], layers, Activation.from_dict(d["activation"]),
                   d["final_activation"])


def dumps_network(net: Network) -> str:
    """Serialize to JSON.  Floats are emitted with ``repr``, which is the
    shortest decimal string that round-trips exactly, so loading recovers
    bitwise-identical weights for every finite float."""
    return json.dumps(network_to_dict(net), indent=2, sort_keys=True)


def loads_network(text: str) -> Network:
    return network_from_dict(json.loads(text))


def save_network(net: Network, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_network(net))
        fh.write("\n")


def load_network(path) -> Network:
    with open(path) as fh:
        return loads_network(fh.read())


def network_hash(net: Network) -> str:
    """Stable content hash used as provenance in reports."""
    return hashlib.sha256(dumps_network(net).encode()).hexdigest()
