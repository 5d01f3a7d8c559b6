"""Activation functions, including a one-to-one surrogate for ReLU.

ReLU is not injective (it is constant on the negative axis), which breaks
the homeomorphism argument used by the level-set analysis.  The surrogate
``one_to_one_relu`` with sharpness ``n`` keeps the identity branch on
``x >= 0`` and replaces the flat branch with ``arctan(x) / n``, which is
strictly increasing and negative for ``x < 0``.  Its uniform distance to
ReLU is at most ``pi / (2 n)``, so the family converges uniformly to ReLU
as ``n`` grows.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class ActivationKind(enum.Enum):
    SIGMOID = "sigmoid"
    TANH = "tanh"
    RELU = "relu"
    ONE_TO_ONE_RELU = "one_to_one_relu"


@dataclass(frozen=True)
class Activation:
    """Elementwise activation descriptor.

    ``sharpness`` is only meaningful for ONE_TO_ONE_RELU, where larger
    values pull the negative branch closer to zero.
    """

    kind: ActivationKind
    sharpness: int | None = None

    def __post_init__(self):
        if self.kind is ActivationKind.ONE_TO_ONE_RELU:
            if self.sharpness is None or self.sharpness < 1:
                raise ValueError("one_to_one_relu requires integer sharpness >= 1")
        elif self.sharpness is not None:
            raise ValueError(f"sharpness is only valid for one_to_one_relu, got {self.kind}")

    @property
    def one_to_one(self) -> bool:
        """True when the function is strictly increasing on all of R."""
        return self.kind is not ActivationKind.RELU

    def __call__(self, x):
        return activation_apply(self, x)

    def derivative(self, x):
        return activation_derivative(self, x)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "sharpness": self.sharpness}

    @staticmethod
    def from_dict(d: dict) -> "Activation":
        return Activation(ActivationKind(d["kind"]), d.get("sharpness"))


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Logistic function.  exp may overflow to inf for very negative inputs,
    which still yields the correct limit 0.0, so the overflow warning is
    suppressed rather than branched around."""
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-x))


def activation_apply(act: Activation, x):
    """Apply ``act`` elementwise.  Accepts scalars or arrays, returns float64.

    All four kinds are total on R.  sigmoid saturates to exactly 0.0 / 1.0
    in float64 for |x| beyond ~745 / ~37; tanh saturates to +-1.0 near |x|=20;
    one_to_one_relu saturates toward -pi/(2 n) as x -> -inf.
    """
    arr = np.asarray(x, dtype=np.float64)
    if act.kind is ActivationKind.SIGMOID:
        out = sigmoid(arr)
    elif act.kind is ActivationKind.TANH:
        out = np.tanh(arr)
    elif act.kind is ActivationKind.RELU:
        out = np.maximum(arr, 0.0)
    else:
        out = np.where(arr >= 0, arr, np.arctan(arr) / act.sharpness)
    if np.isscalar(x) or arr.ndim == 0:
        return float(out)
    return out


def activation_derivative(act: Activation, x):
    """Elementwise derivative at pre-activation ``x``.

    relu and one_to_one_relu use the right derivative (1.0) at x = 0.
    """
    arr = np.asarray(x, dtype=np.float64)
    if act.kind is ActivationKind.SIGMOID:
        s = sigmoid(arr)
        out = s * (1.0 - s)
    elif act.kind is ActivationKind.TANH:
        t = np.tanh(arr)
        out = 1.0 - t * t
    elif act.kind is ActivationKind.RELU:
        out = np.where(arr >= 0, 1.0, 0.0)
    else:
        out = np.where(arr >= 0, 1.0, 1.0 / (act.sharpness * (1.0 + arr * arr)))
    if np.isscalar(x) or arr.ndim == 0:
        return float(out)
    return out


def activation_derivative_at(act: Activation, pre: np.ndarray, post: np.ndarray) -> np.ndarray:
    """Derivative at pre-activation ``pre`` reusing the already computed
    activation value ``post`` where the algebra allows (training hot path)."""
    if act.kind is ActivationKind.SIGMOID:
        return post * (1.0 - post)
    if act.kind is ActivationKind.TANH:
        return 1.0 - post * post
    return activation_derivative(act, pre)


def uniform_deviation(a: Activation, b: Activation, interval: tuple[float, float],
                      grid_points: int) -> float:
    """Max |a(x) - b(x)| over an evenly spaced grid on ``interval``.

    A grid surrogate for the sup norm; used to witness uniform convergence
    of the one-to-one ReLU surrogates (the sup is pi/(2 n), attained only
    in the limit x -> -inf).
    """
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    lo, hi = interval
    xs = np.linspace(lo, hi, grid_points)
    return float(np.max(np.abs(activation_apply(a, xs) - activation_apply(b, xs))))


def one_to_one_relu_bound(sharpness: int) -> float:
    """Sup-norm distance between one_to_one_relu(sharpness) and relu."""
    return math.pi / (2.0 * sharpness)


SIGMOID = Activation(ActivationKind.SIGMOID)
TANH = Activation(ActivationKind.TANH)
RELU = Activation(ActivationKind.RELU)


def one_to_one_relu(sharpness: int) -> Activation:
    return Activation(ActivationKind.ONE_TO_ONE_RELU, sharpness)
