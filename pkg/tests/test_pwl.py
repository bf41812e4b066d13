import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from manifold_relu.pwl import (FALLING, RISING, PiecewiseLinear1D, interpolant,
                               lipschitz_to_network, pwl_to_network, threshold_net,
                               threshold_pwl, truncated_sqrt_net, truncated_square_net)
from netgen import reference_eval


def _random_pwl(rng, p, flat_left=False, flat_right=False):
    b = np.sort(rng.uniform(-5, 5, p - 1))
    while p > 2 and np.min(np.diff(b)) < 1e-3:
        b = np.sort(rng.uniform(-5, 5, p - 1))
    s = rng.normal(size=p)
    if flat_left:
        s[0] = 0.0
    if flat_right:
        s[-1] = 0.0
    return PiecewiseLinear1D(b, s, rng.normal())


def _probe(f):
    b = f.breakpoints
    lo, hi = (b[0] - 3, b[-1] + 3) if b.size else (-3, 3)
    return np.concatenate([np.linspace(lo, hi, 400), b])


def test_direct_evaluation_by_hand():
    f = PiecewiseLinear1D([0.0, 1.0], [2.0, -1.0, 0.5], 3.0)
    assert f(-1.0) == 1.0 and f(0.5) == 2.5 and f(1.0) == 2.0 and f(3.0) == 3.0
    g = PiecewiseLinear1D.from_knots([0, 1, 3], [0, 2, 0])
    assert list(g([-5, 0.5, 2, 9])) == [0.0, 1.0, 1.0, 0.0]


def test_rejects_bad_breakpoints():
    with pytest.raises(ValueError):
        PiecewiseLinear1D([1.0, 0.0], [0, 0, 0], 0)
    with pytest.raises(ValueError):
        PiecewiseLinear1D([0.0], [1.0], 0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12), st.sampled_from(["none", "left", "right"]))
def test_network_is_exact_within_unit_budget(seed, p, flat):
    rng = np.random.default_rng(seed)
    f = _random_pwl(rng, p, flat == "left", flat == "right")
    net = pwl_to_network(f)
    x = _probe(f)
    out = reference_eval(net, x.reshape(-1, 1))[:, 0]
    assert np.max(np.abs(out - f(x))) <= 1e-9 * (1 + np.max(np.abs(f(x))))
    assert net.depth == 2
    budget = p - 1 if (f.flat_left or f.flat_right) else p
    assert net.size <= max(budget, 2 if p == 1 else budget)


def test_constant_and_linear_edge_cases():
    assert pwl_to_network(PiecewiseLinear1D([], [0.0], 4.0))(7.0)[0] == 4.0
    lin = pwl_to_network(PiecewiseLinear1D([], [2.0], 1.0))
    assert np.allclose(lin(np.array([-2.0, 0.0, 3.0]))[:, 0], [-3.0, 1.0, 7.0])
    assert lin.size == 2


@pytest.mark.parametrize("direction", [FALLING, RISING])
def test_threshold_shape_and_size(direction):
    net = threshold_net(2.0, 0.5, direction)
    assert net.size == 2 and net.depth == 2
    x = np.array([-10.0, 1.5, 1.75, 2.0, 2.25, 2.5, 10.0])
    expected = threshold_pwl(2.0, 0.5, direction)(x)
    assert np.allclose(net(x)[:, 0], expected)
    if direction == FALLING:
        assert list(expected[[0, 1, 3, 6]]) == [1.0, 1.0, 0.0, 0.0]
    else:
        assert list(expected[[0, 3, 5, 6]]) == [0.0, 0.0, 1.0, 1.0]
    with pytest.raises(ValueError):
        threshold_pwl(0.0, 0.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(0.01, 1.0))
def test_truncated_square_error_and_size(r, eps):
    res = truncated_square_net(r, eps)
    x = np.concatenate([np.linspace(-r - 1, r + 1, 4001),
                        np.linspace(-r, r, res.segments + 1)])
    err = np.max(np.abs(res.network(x)[:, 0] - np.minimum(x * x, r * r)))
    assert err <= res.sup_error + 1e-12 and res.sup_error <= eps
    assert res.network.size <= 2 * r * r / eps + 2


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 2.0), st.floats(0.1, 4.0), st.floats(0.005, 0.5))
def test_truncated_sqrt_error(g1, span, eps):
    g2 = g1 + span
    res = truncated_sqrt_net(g1, g2, eps)
    x = np.linspace(0, 2 * g2 * g2, 20001)
    target = np.clip(np.sqrt(x), g1, g2)
    assert np.max(np.abs(res.network(x)[:, 0] - target)) <= res.sup_error + 1e-12
    assert res.sup_error <= eps


def test_lipschitz_synthesis_of_cosine():
    res = lipschitz_to_network(np.cos, 1.0, 0.0, math.pi, 0.01)
    x = np.linspace(0, math.pi, 5001)
    assert np.max(np.abs(res.network(x)[:, 0] - np.cos(x))) <= res.sup_error <= 0.01
    assert res.segments == math.ceil(math.pi / 0.01)
    with pytest.raises(ValueError):
        lipschitz_to_network(np.cos, 1.0, 1.0, 0.0, 0.1)


def test_interpolant_hits_knots():
    knots = np.linspace(-1, 2, 7)
    f = interpolant(np.exp, knots)
    assert np.allclose(f(knots), np.exp(knots))
