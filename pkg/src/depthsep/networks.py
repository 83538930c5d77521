"""Layered dense network IR: evaluation, affine absorption, and averaging.

A network is a stack of hidden layers (affine map followed by a scalar
activation) and a final affine output neuron.  Depth is the number of
hidden layers plus one, so the networks built here are depth 2 or depth 3.
All transformation helpers return new networks; instances are treated as
immutable after construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Activation",
    "RELU",
    "THRESHOLD",
    "SIGMOID",
    "DenseNetwork",
    "ThresholdCircuit",
    "absorb_input_shift",
    "absorb_input_map",
    "average_ensemble",
    "network_to_json",
    "network_from_json",
]


@dataclass(frozen=True)
class Activation:
    """Scalar activation with the metadata the compilers need.

    ``variation`` is a pair (c, alpha) such that the total variation on any
    interval [a, b] is at most c * (1 + (|a| + |b|)**alpha).  ``steps``
    marks a piecewise-constant activation by its exact jump positions and
    levels, letting the threshold compiler handle it symbolically.
    """

    tag: str
    fn: Callable[[np.ndarray], np.ndarray] | None = None
    lipschitz: float | None = None
    variation: tuple[float, float] | None = None
    monotone: bool = False
    steps: tuple[tuple[float, ...], tuple[float, ...]] | None = None

    def __call__(self, z: np.ndarray) -> np.ndarray:
        if self.fn is None:
            raise ValueError(f"activation {self.tag!r} has no callable")
        return self.fn(z)


def _relu(z):
    return np.maximum(z, 0.0)


def _threshold(z):
    # unit step firing at 0.5: sigma(z) = 1 iff z >= 0.5
    return np.where(np.asarray(z, dtype=np.float64) >= 0.5, 1.0, 0.0)


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.asarray(z, dtype=np.float64)))


RELU = Activation("relu", _relu, lipschitz=1.0, variation=(1.0, 1.0), monotone=True)
THRESHOLD = Activation(
    "threshold",
    _threshold,
    variation=(1.0, 0.0),
    monotone=True,
    steps=((0.5,), (0.0, 1.0)),
)
SIGMOID = Activation(
    "sigmoid", _sigmoid, lipschitz=0.25, variation=(1.0, 0.0), monotone=True
)

_BUILTIN_ACTIVATIONS = {"relu": RELU, "threshold": THRESHOLD, "sigmoid": SIGMOID}


def activation_by_tag(tag: str) -> Activation:
    try:
        return _BUILTIN_ACTIVATIONS[tag]
    except KeyError:
        raise ValueError(f"unknown activation tag {tag!r}") from None


@dataclass(frozen=True, eq=False)
class DenseNetwork:
    """Feed-forward network: hidden (W, b) layers plus an affine output.

    Weight matrices have shape (fan_out, fan_in); the output neuron is
    ``out_w @ h + out_b`` with no activation.
    """

    input_dim: int
    hidden: tuple[tuple[np.ndarray, np.ndarray], ...]
    out_w: np.ndarray
    out_b: float
    activation: Activation

    def __post_init__(self):
        fan_in = self.input_dim
        for i, (W, b) in enumerate(self.hidden):
            if W.ndim != 2 or W.shape[1] != fan_in or b.shape != (W.shape[0],):
                raise ValueError(f"layer {i} shape mismatch: W{W.shape} after fan-in {fan_in}")
            fan_in = W.shape[0]
        if self.out_w.shape != (fan_in,):
            raise ValueError(f"output weight shape {self.out_w.shape} != ({fan_in},)")
        for W, b in self.hidden:
            W.setflags(write=False)
            b.setflags(write=False)
        self.out_w.setflags(write=False)

    @property
    def depth(self) -> int:
        return len(self.hidden) + 1

    @property
    def widths(self) -> tuple[int, ...]:
        return tuple(W.shape[0] for W, _ in self.hidden)

    @property
    def max_weight(self) -> float:
        vals = [abs(self.out_b)]
        for W, b in self.hidden:
            vals.append(float(np.abs(W).max(initial=0.0)))
            vals.append(float(np.abs(b).max(initial=0.0)))
        vals.append(float(np.abs(self.out_w).max(initial=0.0)))
        return max(vals)

    def evaluate_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.input_dim:
            raise ValueError(f"input dim {X.shape[1]} != {self.input_dim}")
        h = X
        for W, b in self.hidden:
            h = self.activation(h @ W.T + b)
        return h @ self.out_w + self.out_b

    def evaluate(self, x: np.ndarray) -> float:
        return float(self.evaluate_batch(np.asarray(x, dtype=np.float64)[None, :])[0])


@dataclass(frozen=True, eq=False)
class ThresholdCircuit:
    """Threshold network wrapped with a step on the output neuron.

    Output is 1 exactly when the underlying network's output is >= 0.5, so
    any input where the network sits within 0.49 of a bit value is decoded
    to that bit.
    """

    base: DenseNetwork
    output_threshold: bool = True

    def __post_init__(self):
        if self.base.activation.tag != "threshold":
            raise ValueError("circuit base must use the threshold activation")

    def evaluate_batch(self, X: np.ndarray) -> np.ndarray:
        out = self.base.evaluate_batch(X)
        if not self.output_threshold:
            return out
        return np.where(out >= 0.5, 1, 0).astype(np.int64)

    def evaluate(self, x: np.ndarray) -> int:
        return int(self.evaluate_batch(np.asarray(x, dtype=np.float64)[None, :])[0])


def absorb_input_shift(net: DenseNetwork, c: np.ndarray) -> DenseNetwork:
    """Return net' with net'(z) = net(z + c), same architecture.

    Only the first hidden layer's biases change: b' = b + W c.
    """
    c = np.asarray(c, dtype=np.float64)
    if c.shape != (net.input_dim,):
        raise ValueError(f"shift shape {c.shape} != ({net.input_dim},)")
    W0, b0 = net.hidden[0]
    new_first = (W0.copy(), b0 + W0 @ c)
    return DenseNetwork(
        net.input_dim,
        (new_first,) + tuple((W.copy(), b.copy()) for W, b in net.hidden[1:]),
        net.out_w.copy(),
        net.out_b,
        net.activation,
    )


def absorb_input_map(net: DenseNetwork, P: np.ndarray, b: np.ndarray) -> DenseNetwork:
    """Return net' with net'(x) = net(P x + b), same widths and depth.

    P has shape (net.input_dim, new_input_dim).  Rows of +-e_k implement
    selection and bit flips (row -e_k with offset 1 realizes x_k -> 1-x_k),
    permutation matrices reorder coordinates, and zero rows with a constant
    offset pin a coordinate.
    """
    P = np.asarray(P, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] != net.input_dim:
        raise ValueError(f"map shape {P.shape} incompatible with input dim {net.input_dim}")
    if b.shape != (net.input_dim,):
        raise ValueError(f"offset shape {b.shape} != ({net.input_dim},)")
    W0, b0 = net.hidden[0]
    new_first = (W0 @ P, b0 + W0 @ b)
    return DenseNetwork(
        P.shape[1],
        (new_first,) + tuple((W.copy(), bb.copy()) for W, bb in net.hidden[1:]),
        net.out_w.copy(),
        net.out_b,
        net.activation,
    )


def average_ensemble(
    nets: Sequence[DenseNetwork], coeffs: Sequence[float]
) -> DenseNetwork:
    """Combine depth-2 networks into one computing sum_j coeffs[j] * nets[j](x).

    The hidden layer is the concatenation of the members' hidden layers, so
    the result is again depth 2 with width equal to the sum of widths.
    """
    if len(nets) == 0:
        raise ValueError("need at least one network")
    if len(coeffs) != len(nets):
        raise ValueError("one coefficient per network required")
    first = nets[0]
    for net in nets:
        if net.depth != 2:
            raise ValueError("ensemble members must be depth 2")
        if net.activation.tag != first.activation.tag:
            raise ValueError("ensemble members must share one activation")
        if net.input_dim != first.input_dim:
            raise ValueError("ensemble members must share the input dimension")
    W = np.vstack([net.hidden[0][0] for net in nets])
    b = np.concatenate([net.hidden[0][1] for net in nets])
    out_w = np.concatenate([c * net.out_w for c, net in zip(coeffs, nets)])
    out_b = float(sum(c * net.out_b for c, net in zip(coeffs, nets)))
    return DenseNetwork(first.input_dim, ((W, b),), out_w, out_b, first.activation)


def network_to_json(net: DenseNetwork) -> str:
    """Serialize to JSON; round-trips bit-exactly for finite doubles."""
    if net.activation.tag not in _BUILTIN_ACTIVATIONS:
        raise ValueError("only relu/threshold/sigmoid networks serialize")
    doc = {
        "input_dim": net.input_dim,
        "activation": net.activation.tag,
        "layers": [{"W": W.tolist(), "b": b.tolist()} for W, b in net.hidden],
        "output": {"w": net.out_w.tolist(), "b": net.out_b},
    }
    return json.dumps(doc, sort_keys=True)


def network_from_json(text: str) -> DenseNetwork:
    doc = json.loads(text)
    hidden = tuple(
        (np.asarray(layer["W"], dtype=np.float64), np.asarray(layer["b"], dtype=np.float64))
        for layer in doc["layers"]
    )
    return DenseNetwork(
        int(doc["input_dim"]),
        hidden,
        np.asarray(doc["output"]["w"], dtype=np.float64),
        float(doc["output"]["b"]),
        activation_by_tag(doc["activation"]),
    )
