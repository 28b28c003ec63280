import numpy as np
import pytest

from maxout_mlp.exceptions import ConfigError, DimensionError
from maxout_mlp.network import MaxoutNetwork


def test_default_architecture_shapes():
    net = MaxoutNetwork(784, random_state=0, dtype=np.float32)
    shapes = [layer.W.shape for layer in net.affine_layers]
    assert shapes == [(784, 1200), (240, 1200), (240, 10)]
    assert [pool.output_width for _, pool, _ in net.hidden] == [240, 240]
    assert net.input_dropout.keep_prob == 0.8
    assert [d.keep_prob for _, _, d in net.hidden] == [0.5, 0.5]


def test_indivisible_width_rejected():
    with pytest.raises(ConfigError, match="1201"):
        MaxoutNetwork(784, hidden_units=(1200, 1201), pool_size=5)


def test_forward_rejects_wrong_width():
    net = MaxoutNetwork(6, (4,), 2, 3, random_state=0)
    with pytest.raises(DimensionError):
        net.forward(np.zeros((2, 5)))


def test_same_seed_same_init():
    a = MaxoutNetwork(6, (4, 4), 2, 3, random_state=5).get_state()
    b = MaxoutNetwork(6, (4, 4), 2, 3, random_state=5).get_state()
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)


def test_state_round_trip_is_exact(rng):
    net = MaxoutNetwork(6, (4, 4), 2, 3, random_state=rng)
    saved = net.get_state()
    for layer in net.affine_layers:
        layer.W += 1.0
    net.set_state(saved)
    for x, y in zip(net.get_state(), saved):
        assert x.tobytes() == y.tobytes()


def test_set_state_shape_mismatch():
    net = MaxoutNetwork(6, (4,), 2, 3, random_state=0)
    state = net.get_state()
    state[0] = np.zeros((5, 4))
    with pytest.raises(DimensionError):
        net.set_state(state)


def test_streamed_logits_match_single_pass(rng):
    net = MaxoutNetwork(6, (10, 10), 5, 3, random_state=rng)
    X = rng.standard_normal((23, 6))
    np.testing.assert_allclose(net.predict_logits(X, batch_size=7),
                               net.predict_logits(X, batch_size=None), rtol=1e-12)


def test_inference_is_deterministic_and_restores_mode(rng):
    net = MaxoutNetwork(6, (10,), 5, 3, random_state=rng).train()
    X = rng.standard_normal((5, 6))
    a, b = net.predict_logits(X), net.predict_logits(X)
    np.testing.assert_array_equal(a, b)
    assert all(d.training for d in net.dropouts)


def test_inverted_dropout_is_a_reparameterization(rng):
    """Standard dropout with weights W equals inverted dropout with each
    weight matrix scaled by the keep probability of the site feeding it."""
    kw = dict(hidden_units=(10, 10), pool_size=5, n_classes=3, input_keep=0.8,
              hidden_keep=0.5)
    std = MaxoutNetwork(6, **kw, random_state=1)
    inv = MaxoutNetwork(6, **kw, inverted_dropout=True, random_state=1)
    for layer, drop, target in zip(std.affine_layers, std.dropouts, inv.affine_layers):
        target.W[...] = layer.W * drop.keep_prob
        target.b[...] = layer.b
    X = rng.standard_normal((8, 6))
    np.testing.assert_allclose(std.predict_logits(X), inv.predict_logits(X), rtol=1e-12)

    std.train()
    inv.train()
    out_std = std.forward(X, np.random.default_rng(3))
    out_inv = inv.forward(X, np.random.default_rng(3))
    np.testing.assert_allclose(out_std, out_inv, rtol=1e-12, atol=1e-12)


def test_float32_network_stays_float32(rng):
    net = MaxoutNetwork(6, (10,), 5, 3, dtype=np.float32, random_state=rng)
    X = rng.standard_normal((4, 6))
    loss = net.loss_and_grad(X, np.array([0, 1, 2, 0]), rng)
    assert np.isfinite(loss)
    assert all(layer.grad_W.dtype == np.float32 for layer in net.affine_layers)
    assert net.predict_logits(X).dtype == np.float32
