"""Explicit ReLU feed-forward networks and the combinators used to build them.

A network is a chain of affine layers; every layer but the last applies a
ReLU.  Depth counts all layers, size counts hidden units only.  All
combinators build new immutable networks, so sizes can be audited exactly
against closed-form budgets.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

RELU = "relu"
IDENTITY = "identity"


class NetworkError(ValueError):
    """Raised for malformed networks or incompatible combinator inputs."""


@dataclass(frozen=True, eq=False)
class AffineLayer:
    weights: np.ndarray
    biases: np.ndarray
    activation: str = RELU

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64, ndmin=2)
        b = np.array(self.biases, dtype=np.float64).reshape(-1)
        if w.shape[0] != b.shape[0]:
            raise NetworkError(f"bias length {b.shape[0]} != weight rows {w.shape[0]}")
        if self.activation not in (RELU, IDENTITY):
            raise NetworkError(f"unknown activation {self.activation!r}")
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "biases", b)

    @property
    def in_width(self) -> int:
        return self.weights.shape[1]

    @property
    def out_width(self) -> int:
        return self.weights.shape[0]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        z = x @ self.weights.T + self.biases
        return np.maximum(z, 0.0) if self.activation == RELU else z


@dataclass(frozen=True)
class NetworkMetrics:
    depth: int
    width: int
    size: int


@dataclass(frozen=True, eq=False)
class ReluNetwork:
    layers: tuple[AffineLayer, ...]
    input_dim: int

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        validate(self)

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_width

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def size(self) -> int:
        return sum(layer.out_width for layer in self.layers[:-1])

    def __call__(self, x):
        return evaluate(self, x)

    def __repr__(self):
        m = metrics(self)
        return (f"ReluNetwork(input_dim={self.input_dim}, output_dim={self.output_dim}, "
                f"depth={m.depth}, size={m.size})")


def validate(net: ReluNetwork) -> None:
    """Check the structural invariants; raises NetworkError on violation."""
    if net.input_dim < 1:
        raise NetworkError("input_dim must be positive")
    if not net.layers:
        raise NetworkError("network needs at least one layer")
    width = net.input_dim
    for i, layer in enumerate(net.layers):
        if layer.in_width != width:
            raise NetworkError(f"layer {i} expects width {layer.in_width}, got {width}")
        last = i == len(net.layers) - 1
        if last and layer.activation != IDENTITY:
            raise NetworkError("last layer must be affine (identity activation)")
        if not last and layer.activation != RELU:
            raise NetworkError(f"hidden layer {i} must use ReLU")
        width = layer.out_width


def metrics(net: ReluNetwork) -> NetworkMetrics:
    hidden = [layer.out_width for layer in net.layers[:-1]]
    return NetworkMetrics(depth=len(net.layers), width=max(hidden, default=0), size=sum(hidden))


def evaluate(net: ReluNetwork, x) -> np.ndarray:
    """Forward pass.  Accepts a single vector or a batch of row vectors."""
    x = np.asarray(x, dtype=np.float64)
    single = False
    if x.ndim == 0:
        batch, single = x.reshape(1, 1), True
    elif x.ndim == 1 and x.shape[0] == net.input_dim:
        batch, single = x.reshape(1, -1), True
    elif x.ndim == 1 and net.input_dim == 1:
        batch = x.reshape(-1, 1)  # flat array of scalar inputs
    else:
        batch = x
    if batch.ndim != 2 or batch.shape[1] != net.input_dim:
        raise NetworkError(f"input shape {x.shape} incompatible with input_dim {net.input_dim}")
    for layer in net.layers:
        batch = layer(batch)
    return batch[0] if single else batch


# ---------------------------------------------------------------------------
# primitive networks


def affine(weights, biases=None) -> ReluNetwork:
    """Depth-1 network computing ``W x + b`` (size 0)."""
    w = np.array(weights, dtype=np.float64, ndmin=2)
    b = np.zeros(w.shape[0]) if biases is None else biases
    return ReluNetwork((AffineLayer(w, b, IDENTITY),), w.shape[1])


def identity(width: int) -> ReluNetwork:
    return affine(np.eye(width))


def passthrough(width: int, nonnegative: bool = False) -> ReluNetwork:
    """Depth-2 network equal to the identity map.

    Uses ``x = relu(x) - relu(-x)`` (2 units per coordinate), or a single
    unit per coordinate when the inputs are known to be nonnegative.
    """
    eye = np.eye(width)
    if nonnegative:
        hidden = AffineLayer(eye, np.zeros(width))
        out = AffineLayer(eye, np.zeros(width), IDENTITY)
    else:
        hidden = AffineLayer(np.vstack([eye, -eye]), np.zeros(2 * width))
        out = AffineLayer(np.hstack([eye, -eye]), np.zeros(width), IDENTITY)
    return ReluNetwork((hidden, out), width)


def zero_network(input_dim: int, depth: int = 2) -> ReluNetwork:
    """Constant-zero network of the given depth with one dead unit per hidden layer."""
    if depth == 1:
        return affine(np.zeros((1, input_dim)))
    layers = [AffineLayer(np.zeros((1, input_dim)), np.zeros(1))]
    layers += [AffineLayer(np.zeros((1, 1)), np.zeros(1)) for _ in range(depth - 2)]
    layers.append(AffineLayer(np.zeros((1, 1)), np.zeros(1), IDENTITY))
    return ReluNetwork(tuple(layers), input_dim)


# ---------------------------------------------------------------------------
# combinators


def compose(outer: ReluNetwork, inner: ReluNetwork) -> ReluNetwork:
    """Network for ``outer(inner(x))``.

    The inner affine output layer is fused into the outer first layer, so
    depth is ``depth(inner) + depth(outer) - 1`` and size adds exactly.
    """
    if outer.input_dim != inner.output_dim:
        raise NetworkError(
            f"cannot compose: outer expects {outer.input_dim}, inner gives {inner.output_dim}")
    last, first = inner.layers[-1], outer.layers[0]
    fused = AffineLayer(first.weights @ last.weights,
                        first.weights @ last.biases + first.biases,
                        first.activation)
    return ReluNetwork(inner.layers[:-1] + (fused,) + outer.layers[1:], inner.input_dim)


def pad_to_depth(net: ReluNetwork, depth: int, nonnegative: bool = False) -> ReluNetwork:
    """Extend ``net`` with identity gadgets until it has ``depth`` layers."""
    if depth < net.depth:
        raise NetworkError(f"cannot pad depth {net.depth} down to {depth}")
    gadget = passthrough(net.output_dim, nonnegative)
    while net.depth < depth:
        net = compose(gadget, net)
    return net


def align_depths(nets: Sequence[ReluNetwork], nonnegative: bool = False):
    """Pad all nets to the largest depth.  Returns (padded nets, padding units)."""
    target = max(n.depth for n in nets)
    padded = [pad_to_depth(n, target, nonnegative) for n in nets]
    padding = sum(p.size - n.size for p, n in zip(padded, nets))
    return padded, padding


def parallel(nets: Sequence[ReluNetwork], nonnegative: bool = False) -> ReluNetwork:
    """Run nets side by side on a shared input; outputs are concatenated.

    Nets of unequal depth are padded first (see ``align_depths``).
    """
    if not nets:
        raise NetworkError("parallel needs at least one network")
    dims = {n.input_dim for n in nets}
    if len(dims) != 1:
        raise NetworkError(f"parallel nets disagree on input_dim: {sorted(dims)}")
    nets, _ = align_depths(nets, nonnegative)
    layers = []
    for k in range(nets[0].depth):
        group = [n.layers[k] for n in nets]
        if k == 0:
            w = np.vstack([g.weights for g in group])
        else:
            w = _block_diag([g.weights for g in group])
        b = np.concatenate([g.biases for g in group])
        layers.append(AffineLayer(w, b, group[0].activation))
    return ReluNetwork(tuple(layers), nets[0].input_dim)


def _block_diag(blocks):
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = np.zeros((rows, cols))
    r = c = 0
    for b in blocks:
        out[r:r + b.shape[0], c:c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out


def add(f: ReluNetwork, g: ReluNetwork, nonnegative: bool = False) -> ReluNetwork:
    """Network for ``f(x) + g(x)``; equal depths give size ``s_f + s_g``."""
    if f.input_dim != g.input_dim or f.output_dim != g.output_dim:
        raise NetworkError("add requires matching input and output dimensions")
    m = f.output_dim
    both = parallel([f, g], nonnegative)
    return compose(affine(np.hstack([np.eye(m), np.eye(m)])), both)


def total(nets: Sequence[ReluNetwork], nonnegative: bool = False) -> ReluNetwork:
    """Sum of any number of scalar- or vector-valued nets (fan-in addition)."""
    m = nets[0].output_dim
    if any(n.output_dim != m for n in nets):
        raise NetworkError("total requires matching output dimensions")
    both = parallel(nets, nonnegative)
    return compose(affine(np.hstack([np.eye(m)] * len(nets))), both)


def _max_level(width: int) -> ReluNetwork:
    """One hidden layer reducing ``width`` values to ``ceil(width/2)`` pairwise maxima.

    max(a, b) = (relu(a+b) - relu(-a-b) + relu(a-b) + relu(b-a)) / 2 uses 4 units;
    an unpaired trailing value rides through on 2 units.
    """
    pairs, odd = divmod(width, 2)
    rows, out = [], np.zeros((pairs + odd, 4 * pairs + 2 * odd))
    for p in range(pairs):
        a, b = np.zeros(width), np.zeros(width)
        a[2 * p], b[2 * p + 1] = 1.0, 1.0
        rows += [a + b, -a - b, a - b, b - a]
        out[p, 4 * p:4 * p + 4] = [0.5, -0.5, 0.5, 0.5]
    if odd:
        e = np.zeros(width)
        e[-1] = 1.0
        rows += [e, -e]
        out[pairs, 4 * pairs:] = [1.0, -1.0]
    hidden = AffineLayer(np.array(rows), np.zeros(len(rows)))
    return ReluNetwork((hidden, AffineLayer(out, np.zeros(out.shape[0]), IDENTITY)), width)


def maximum(nets: Sequence[ReluNetwork]) -> ReluNetwork:
    """Network for the pointwise maximum of scalar nets via a balanced pairwise tree."""
    if len(nets) < 2:
        raise NetworkError("maximum needs at least two networks")
    if any(n.output_dim != 1 for n in nets):
        raise NetworkError("maximum requires scalar-output networks")
    net = parallel(nets)
    while net.output_dim > 1:
        net = compose(_max_level(net.output_dim), net)
    return net


def max_tree_levels(m: int) -> int:
    return math.ceil(math.log2(m)) if m > 1 else 0


# ---------------------------------------------------------------------------
# serialization


def to_dict(net: ReluNetwork) -> dict:
    return {
        "input_dim": net.input_dim,
        "layers": [
            {"weights": layer.weights.tolist(), "biases": layer.biases.tolist(),
             "activation": layer.activation}
            for layer in net.layers
        ],
    }


def from_dict(doc: dict) -> ReluNetwork:
    layers = []
    for spec in doc["layers"]:
        w = np.array(spec["weights"], dtype=np.float64)
        if w.ndim == 1:
            w = w.reshape(len(spec["biases"]), -1)
        layers.append(AffineLayer(w, spec["biases"], spec["activation"]))
    return ReluNetwork(tuple(layers), int(doc["input_dim"]))


def to_json(net: ReluNetwork) -> str:
    return json.dumps(to_dict(net))


def from_json(text: str) -> ReluNetwork:
    return from_dict(json.loads(text))
