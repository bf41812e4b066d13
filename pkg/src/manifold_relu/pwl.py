"""Two-layer ReLU representations of one-dimensional piecewise-linear maps.

Also builds the interpolants used for the truncated power functions and the
three-piece threshold ramps.  Each synthesized net carries a certified
sup-norm error bound in ``SynthResult.sup_error``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .relu_core import IDENTITY, AffineLayer, ReluNetwork

FALLING = "falling"
RISING = "rising"


@dataclass(frozen=True, eq=False)
class PiecewiseLinear1D:
    """Continuous PWL function given by breakpoints, slopes and its value at the first breakpoint.

    With no breakpoints (a single piece) ``anchor_value`` is the value at 0.
    """

    breakpoints: np.ndarray
    slopes: np.ndarray
    anchor_value: float

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=np.float64).reshape(-1)
        s = np.asarray(self.slopes, dtype=np.float64).reshape(-1)
        if s.shape[0] != b.shape[0] + 1:
            raise ValueError(f"need {b.shape[0] + 1} slopes for {b.shape[0]} breakpoints")
        if np.any(np.diff(b) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "slopes", s)
        object.__setattr__(self, "anchor_value", float(self.anchor_value))

    @property
    def pieces(self) -> int:
        return self.slopes.shape[0]

    @property
    def flat_left(self) -> bool:
        return self.slopes[0] == 0.0

    @property
    def flat_right(self) -> bool:
        return self.slopes[-1] == 0.0

    def knot_values(self) -> np.ndarray:
        if self.breakpoints.size == 0:
            return np.array([])
        steps = np.diff(self.breakpoints) * self.slopes[1:-1]
        return self.anchor_value + np.concatenate([[0.0], np.cumsum(steps)])

    def __call__(self, x):
        """Direct piecewise evaluation (no ReLU algebra)."""
        x = np.asarray(x, dtype=np.float64)
        b = self.breakpoints
        if b.size == 0:
            return self.anchor_value + self.slopes[0] * x
        vals = self.knot_values()
        piece = np.searchsorted(b, x, side="right")  # 0..p-1
        left = np.clip(piece - 1, 0, b.size - 1)
        return vals[left] + self.slopes[piece] * (x - b[left])

    @classmethod
    def from_knots(cls, xs, ys, left_slope=0.0, right_slope=0.0):
        xs = np.asarray(xs, dtype=np.float64)
        ys = np.asarray(ys, dtype=np.float64)
        inner = np.diff(ys) / np.diff(xs)
        return cls(xs, np.concatenate([[left_slope], inner, [right_slope]]), ys[0])


@dataclass(frozen=True, eq=False)
class SynthResult:
    network: ReluNetwork
    sup_error: float
    segments: int


def _two_layer(w_in, b_in, w_out, b_out) -> ReluNetwork:
    hidden = AffineLayer(np.asarray(w_in, dtype=np.float64).reshape(-1, 1), b_in)
    out = AffineLayer(np.asarray(w_out, dtype=np.float64).reshape(1, -1), [b_out], IDENTITY)
    return ReluNetwork((hidden, out), 1)


def pwl_to_network(f: PiecewiseLinear1D) -> ReluNetwork:
    """Exact depth-2 network for ``f`` with at most ``p`` hidden units.

    A flat leftmost (rightmost) piece lets every unit be a forward (backward)
    hinge, giving ``p - 1`` units.  Hinges whose slope change is zero are
    dropped.  A single non-constant piece needs ``relu(x) - relu(-x)``.
    """
    b, s, p = f.breakpoints, f.slopes, f.pieces
    if p == 1:
        if s[0] == 0.0:
            return _two_layer([0.0], [0.0], [0.0], f.anchor_value)
        return _two_layer([1.0, -1.0], [0.0, 0.0], [s[0], -s[0]], f.anchor_value)

    jumps = np.diff(s)  # slope change at each breakpoint
    if f.flat_left:
        keep = jumps != 0.0
        w_in, b_in, w_out = np.ones(keep.sum()), -b[keep], jumps[keep]
        bias = f.anchor_value
    elif f.flat_right:
        keep = jumps != 0.0
        w_in, b_in, w_out = -np.ones(keep.sum()), b[keep], jumps[keep]
        bias = f.knot_values()[-1]
    else:
        # two-sided hinge at b_1 carries both outer slopes, hinges elsewhere
        rest = jumps[1:]
        keep = rest != 0.0
        w_in = np.concatenate([[1.0, -1.0], np.ones(keep.sum())])
        b_in = np.concatenate([[-b[0], b[0]], -b[1:][keep]])
        w_out = np.concatenate([[s[1], -s[0]], rest[keep]])
        bias = f.anchor_value
    if w_in.size == 0:
        return _two_layer([0.0], [0.0], [0.0], bias)
    return _two_layer(w_in, b_in, w_out, bias)


def interpolant(f: Callable, knots) -> PiecewiseLinear1D:
    """PWL interpolant of ``f`` through ``knots``, constant outside them."""
    knots = np.asarray(knots, dtype=np.float64)
    return PiecewiseLinear1D.from_knots(knots, np.array([f(k) for k in knots], dtype=np.float64))


def lipschitz_to_network(f: Callable, L: float, a: float, b: float, eps: float) -> SynthResult:
    """Equal-partition interpolant of an L-Lipschitz ``f`` that is constant outside ``[a, b]``.

    Uses ``m = ceil(L (b - a) / eps)`` segments, hence at most ``m + 1``
    hidden units; the chord error on a segment of length h is at most L h / 2.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not a < b:
        raise ValueError("need a < b")
    if L < 0:
        raise ValueError("Lipschitz constant must be nonnegative")
    m = math.ceil(L * (b - a) / eps)
    if m == 0:
        return SynthResult(_two_layer([0.0], [0.0], [0.0], float(f(a))), 0.0, 0)
    knots = np.linspace(a, b, m + 1)
    net = pwl_to_network(interpolant(f, knots))
    return SynthResult(net, L * (b - a) / m / 2, m)


def truncated_square_net(r: float, eps: float) -> SynthResult:
    """Approximates ``min(x^2, r^2)`` within ``eps`` using at most ``2 r^2 / eps + 2`` units.

    The target is 2r-Lipschitz and constant off ``[-r, r]``; with the L h / 2
    chord bound ``ceil(2 r^2 / eps)`` segments suffice.  The reported error is
    the exact chord error of x^2, h^2 / 4.
    """
    if r <= 0 or eps <= 0:
        raise ValueError("r and eps must be positive")
    m = max(1, math.ceil(2 * r * r / eps))
    knots = np.linspace(-r, r, m + 1)
    net = pwl_to_network(PiecewiseLinear1D.from_knots(knots, knots ** 2))
    h = 2 * r / m
    return SynthResult(net, h * h / 4, m)


def sqrt_segments(g1: float, g2: float, eps: float) -> int:
    return math.ceil((g2 - g1) / (2 * eps * math.sqrt(g1)))


def truncated_sqrt_net(g1: float, g2: float, eps: float) -> SynthResult:
    """Approximates ``min(max(sqrt(x), g1), g2)``.

    Knots are equally spaced in ``sqrt(x)`` (at ``y_i^2``) with the segment
    count of the clamped-root row of the sub-network table.  The chord error
    on ``[y^2, (y + D)^2]`` is ``D^2 / (4 (2 y + D))``, worst at ``y = g1``.
    """
    if g1 <= 0 or g2 <= g1:
        raise ValueError("need 0 < g1 < g2")
    if eps <= 0:
        raise ValueError("eps must be positive")
    m = max(1, sqrt_segments(g1, g2, eps))
    # the table count certifies eps only for eps <= 2; refine beyond that
    while (g2 - g1) ** 2 / (4 * m * (2 * g1 * m + g2 - g1)) > eps:
        m += 1
    ys = np.linspace(g1, g2, m + 1)
    net = pwl_to_network(PiecewiseLinear1D.from_knots(ys ** 2, ys))
    step = (g2 - g1) / m
    return SynthResult(net, step * step / (4 * (2 * g1 + step)), m)


def threshold_pwl(t: float, delta: float, direction: str = FALLING) -> PiecewiseLinear1D:
    if delta <= 0:
        raise ValueError("delta must be positive")
    if direction == FALLING:
        return PiecewiseLinear1D([t - delta, t], [0.0, -1.0 / delta, 0.0], 1.0)
    if direction == RISING:
        return PiecewiseLinear1D([t, t + delta], [0.0, 1.0 / delta, 0.0], 0.0)
    raise ValueError(f"direction must be {FALLING!r} or {RISING!r}")


def threshold_net(t: float, delta: float, direction: str = FALLING) -> ReluNetwork:
    """Three-piece ramp: falling is 1 below ``t - delta`` and 0 above ``t``;
    rising is 0 below ``t`` and 1 above ``t + delta``.  Two hidden units."""
    return pwl_to_network(threshold_pwl(t, delta, direction))
