"""Construction and verification of non-singular networks.

A network is non-singular when every hidden layer has width equal to the
input dimension, the activation is one-to-one, and every square weight matrix
is invertible.  The trunk of such a network is a homeomorphism onto its
image, which is what forces its level sets to be unbounded.  This module
normalizes widths by zero-padding, checks determinants, nudges singular
matrices by arbitrarily small random perturbations, and gathers grid-scale
numeric evidence that a trunk really is injective.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from .network import Layer, Network, Window, forward_batch

# |det| threshold on row-max-scaled matrices; scale-invariant for the tiny
# matrices handled here.
TOL_DET = 1e-9
# retries for the random perturbation before giving up
MAX_ATTEMPTS = 64
# output-space cell width used to hash candidate collisions
INJECTIVITY_QUANT = 1e-12
# default relative-separation floor: a pair of grid points may contract by
# at most this factor of (input separation / window diagonal) * image scale.
# True collapses (bugs) produce exactly coincident outputs and always fail;
# honest but badly conditioned trunks (padded width-1 bottlenecks perturbed
# by a tiny delta) legitimately contract far below 1e-9 and must still pass.
DEFAULT_MIN_SEP = 1e-12


class NonSingularizationError(RuntimeError):
    """Raised when perturbation fails to reach non-singularity."""

    def __init__(self, layer_index: int, delta: float):
        self.layer_index = layer_index
        super().__init__(
            f"layer {layer_index} still singular after {MAX_ATTEMPTS} perturbations "
            f"of size {delta}")


def scaled_det(matrix: np.ndarray) -> float:
    """|det| after scaling each row by its max absolute entry.

    Computed with an explicit LU factorization with partial pivoting so the
    operation order is fixed (no BLAS dispatch).  A zero row yields 0.
    """
    a = np.array(matrix, dtype=np.float64)
    n, m = a.shape
    if n != m:
        raise ValueError(f"determinant of non-square matrix {a.shape}")
    row_max = np.max(np.abs(a), axis=1)
    if np.any(row_max == 0.0):
        return 0.0
    a /= row_max[:, None]
    det = 1.0
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if a[p, k] == 0.0:
            return 0.0
        if p != k:
            a[[k, p]] = a[[p, k]]
        det *= a[k, k]
        a[k + 1:, k:] -= np.outer(a[k + 1:, k] / a[k, k], a[k, k:])
    return float(abs(det))


@dataclass(frozen=True)
class NonSingularityReport:
    """Outcome of the membership check for the non-singular family."""

    determinants: tuple[float, ...]
    activation_one_to_one: bool
    widths_uniform: bool
    verdict: bool
    tolerance_used: float

    def to_dict(self) -> dict:
        return {
            "determinants": list(self.determinants),
            "activation_one_to_one": self.activation_one_to_one,
            "widths_uniform": self.widths_uniform,
            "verdict": self.verdict,
            "tolerance_used": self.tolerance_used,
        }


def pad_to_width(net: Network, n: int) -> Network:
    """Embed ``net`` in a network whose hidden layers all have width ``n``.

    Added neurons get zero weights in and out and zero bias, so the function
    is unchanged: the new coordinates never feed back into the original ones.
    Padded layers are singular by construction (a zero row), which is why
    ``make_nonsingular`` exists.
    """
    if net.input_dim != n:
        raise ValueError(f"pad_to_width requires input_dim == {n}, got {net.input_dim}")
    if any(w > n for w in net.hidden_widths):
        raise ValueError(f"hidden width exceeds target {n}: {net.hidden_widths}")
    if all(w == n for w in net.hidden_widths):
        return net
    layers = []
    prev = net.input_dim
    for i, layer in enumerate(net.layers):
        is_head = i == len(net.layers) - 1
        out = layer.n_out if is_head else n
        w = np.zeros((out, prev))
        w[:layer.n_out, :layer.n_in] = layer.weights
        b = np.zeros(out)
        b[:layer.n_out] = layer.bias
        layers.append(Layer(w, b))
        prev = out
    return Network(net.input_dim, tuple(layers), net.activation, net.final_activation)


def _square_layer_matrices(net: Network) -> list[np.ndarray]:
    """Weight matrices subject to the determinant requirement.

    Every layer except the head: the head maps the last hidden layer to a
    1-dimensional output and cannot be square.
    """
    return [layer.weights for layer in net.layers[:-1]]


def is_nonsingular(net: Network, tol: float = TOL_DET) -> NonSingularityReport:
    """Check membership in the non-singular family at determinant tolerance ``tol``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    widths_uniform = all(w == net.input_dim for w in net.hidden_widths)
    dets = []
    for w in _square_layer_matrices(net):
        dets.append(scaled_det(w) if w.shape[0] == w.shape[1] else 0.0)
    if not np.any(net.layers[-1].weights):
        warnings.warn("head weights are all zero: the network is constant and every "
                      "level set is empty or everything", stacklevel=2)
    verdict = (widths_uniform and net.activation.one_to_one
               and all(d >= tol for d in dets))
    return NonSingularityReport(tuple(dets), net.activation.one_to_one,
                                widths_uniform, verdict, tol)


def make_nonsingular(net: Network, delta: float, seed: int) -> Network:
    """Perturb singular layer matrices by at most ``delta`` (max-norm) until
    every square matrix clears TOL_DET.

    Layers that are already non-singular are returned untouched, so the
    operation is idempotent.  Perturbations are ``delta * R`` with R uniform
    in [-1, 1], retried with fresh draws up to MAX_ATTEMPTS; failure raises
    NonSingularizationError with the offending layer index.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if not all(w == net.input_dim for w in net.hidden_widths):
        raise ValueError("make_nonsingular expects uniform hidden widths; run pad_to_width first")
    rng = np.random.default_rng(seed)
    layers = list(net.layers)
    for i in range(len(layers) - 1):
        w = layers[i].weights
        if scaled_det(w) >= TOL_DET:
            continue
        for _ in range(MAX_ATTEMPTS):
            bump = delta * rng.uniform(-1.0, 1.0, size=w.shape)
            candidate = w + bump
            if scaled_det(candidate) >= TOL_DET:
                layers[i] = Layer(candidate, layers[i].bias)
                break
        else:
            raise NonSingularizationError(i, delta)
    if all(old is new for old, new in zip(net.layers, layers)):
        return net
    return Network(net.input_dim, tuple(layers), net.activation, net.final_activation)


def check_injective_on_grid(trunk: Network, window: Window, resolution: int,
                            min_sep: float = DEFAULT_MIN_SEP) -> bool:
    """Grid-scale injectivity witness for a trunk.

    Maps every lattice point of a ``resolution``-per-axis grid through the
    trunk and requires distinct inputs to stay separated in output space:
    a pair (x, y) fails when

        |trunk(x) - trunk(y)| < min_sep * (|x - y| / window diagonal) * scale

    where ``scale`` is the diagonal of the output bounding box (floored at
    the quantization width so constant maps cannot pass vacuously).  Only
    pairs whose outputs land in the same or adjacent quantization cells can
    violate the bound at the default ``min_sep``, so candidates are found by
    hashing quantized outputs and then verified pairwise.  This is evidence
    against construction bugs, not a proof of injectivity.
    """
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    if trunk.input_dim != window.dim:
        raise ValueError(f"trunk input dim {trunk.input_dim} != window dim {window.dim}")
    axes = [np.linspace(window.lo[d], window.hi[d], resolution) for d in range(window.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    outputs = forward_batch(trunk, points)

    out_extent = outputs.max(axis=0) - outputs.min(axis=0)
    scale = max(float(np.linalg.norm(out_extent)), INJECTIVITY_QUANT)
    diag = window.diagonal

    cells: dict[tuple, list[int]] = {}
    quantized = np.floor(outputs / INJECTIVITY_QUANT).astype(np.int64)
    for idx, key in enumerate(map(tuple, quantized)):
        cells.setdefault(key, []).append(idx)

    offsets = [off for off in itertools.product((-1, 0, 1), repeat=outputs.shape[1])]

    def pair_ok(i: int, j: int) -> bool:
        d_out = float(np.linalg.norm(outputs[i] - outputs[j]))
        d_in = float(np.linalg.norm(points[i] - points[j]))
        return d_out >= min_sep * (d_in / diag) * scale

    for key, members in cells.items():
        for a_pos, i in enumerate(members):
            for j in members[a_pos + 1:]:
                if not pair_ok(i, j):
                    return False
        for off in offsets:
            if off <= (0,) * len(off):
                continue  # each unordered cell pair visited once
            neighbor = cells.get(tuple(k + o for k, o in zip(key, off)))
            if neighbor is None:
                continue
            for i in members:
                for j in neighbor:
                    if not pair_ok(i, j):
                        return False
    return True
