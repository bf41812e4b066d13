import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from manifold_relu import relu_core as rc
from manifold_relu.relu_core import AffineLayer, NetworkError, ReluNetwork
from netgen import random_net, reference_eval


def test_depth_and_size_conventions():
    net = ReluNetwork((AffineLayer(np.ones((3, 2)), np.zeros(3)),
                       AffineLayer(np.ones((1, 3)), [0.0], rc.IDENTITY)), 2)
    assert (net.depth, net.size, net.output_dim) == (2, 3, 1)
    assert rc.metrics(net) == rc.NetworkMetrics(2, 3, 3)


def test_validation_rejects_bad_layers():
    with pytest.raises(NetworkError):
        ReluNetwork((AffineLayer(np.ones((3, 2)), np.zeros(3)),), 2)  # relu output layer
    with pytest.raises(NetworkError):
        ReluNetwork((AffineLayer(np.ones((3, 2)), np.zeros(3)),
                     AffineLayer(np.ones((1, 4)), [0.0], rc.IDENTITY)), 2)
    with pytest.raises(NetworkError):
        AffineLayer(np.ones((2, 2)), np.zeros(3))


def test_evaluate_accepts_scalars_vectors_and_batches():
    net = rc.passthrough(1)
    assert net(2.5)[0] == 2.5
    assert net(np.array([-1.0, 3.0])).shape == (2, 1)
    net2 = rc.affine([[1.0, 2.0]], [1.0])
    assert net2([1.0, 1.0])[0] == 4.0
    with pytest.raises(NetworkError):
        net2(np.ones((3, 3)))


@pytest.mark.parametrize("nonneg", [False, True])
def test_passthrough_is_identity(nonneg):
    x = np.linspace(0 if nonneg else -3, 3, 13).reshape(-1, 1)
    net = rc.passthrough(1, nonneg)
    assert np.allclose(net(x), x)
    assert net.size == (1 if nonneg else 2)


def test_zero_network_and_padding():
    z = rc.zero_network(3, depth=4)
    assert z.depth == 4 and np.all(z(np.ones((5, 3))) == 0)
    rng = np.random.default_rng(1)
    f = random_net(rng, 2, depth=2)
    g = rc.pad_to_depth(f, 5)
    x = rng.normal(size=(20, 2))
    assert g.depth == 5 and g.size == f.size + 2 * 3
    assert np.allclose(g(x), f(x))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_compose_matches_sequential_evaluation(seed):
    rng = np.random.default_rng(seed)
    mid = int(rng.integers(1, 4))
    inner = random_net(rng, 3, mid)
    outer = random_net(rng, mid, 2)
    h = rc.compose(outer, inner)
    assert h.depth == inner.depth + outer.depth - 1
    assert h.size == inner.size + outer.size
    x = rng.normal(size=(10, 3))
    assert np.max(np.abs(h(x) - reference_eval(outer, reference_eval(inner, x)))) <= 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_add_equal_depth(seed):
    rng = np.random.default_rng(seed)
    depth = int(rng.integers(2, 5))
    f, g = random_net(rng, 2, 1, depth), random_net(rng, 2, 1, depth)
    s = rc.add(f, g)
    assert (s.depth, s.size) == (depth, f.size + g.size)
    x = rng.normal(size=(10, 2))
    assert np.max(np.abs(s(x) - reference_eval(f, x) - reference_eval(g, x))) <= 1e-9


def test_add_pads_unequal_depths():
    rng = np.random.default_rng(3)
    f, g = random_net(rng, 2, 1, 2), random_net(rng, 2, 1, 4)
    s = rc.add(f, g)
    x = rng.normal(size=(10, 2))
    assert np.allclose(s(x), f(x) + g(x))
    assert s.size == f.size + g.size + 2 * 2


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 7))
def test_maximum(seed, m):
    rng = np.random.default_rng(seed)
    depth = int(rng.integers(2, 4))
    nets = [random_net(rng, 2, 1, depth) for _ in range(m)]
    h = rc.maximum(nets)
    x = rng.normal(size=(10, 2))
    ref = np.max(np.hstack([reference_eval(n, x) for n in nets]), axis=1, keepdims=True)
    assert np.max(np.abs(h(x) - ref)) <= 1e-9
    assert h.size <= sum(n.size for n in nets) + 4 * (2 * m - 1)
    assert h.depth == depth + rc.max_tree_levels(m)


def test_total_and_parallel():
    rng = np.random.default_rng(7)
    nets = [random_net(rng, 3, 2, 3) for _ in range(4)]
    x = rng.normal(size=(6, 3))
    assert np.allclose(rc.total(nets)(x), sum(n(x) for n in nets))
    assert np.allclose(rc.parallel(nets)(x), np.hstack([n(x) for n in nets]))
    with pytest.raises(NetworkError):
        rc.parallel([random_net(rng, 2), random_net(rng, 3)])


def test_json_roundtrip():
    rng = np.random.default_rng(11)
    net = random_net(rng, 3, 2, 4)
    back = rc.from_json(rc.to_json(net))
    x = rng.normal(size=(5, 3))
    assert np.array_equal(back(x), net(x))
    assert (back.depth, back.size) == (net.depth, net.size)
