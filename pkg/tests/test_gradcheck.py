import numpy as np
import pytest

from maxout_mlp.gradcheck import (GradCheckReport, central_difference, check_network,
                                  pooling_gap, reference_loss, relative_error)
from maxout_mlp.layers import softmax_cross_entropy
from maxout_mlp.network import MaxoutNetwork


def test_quadratic_is_exact():
    assert central_difference(lambda t: t ** 2, 3.0, 1e-5) == pytest.approx(6.0, abs=1e-9)


def test_constant_has_zero_gradient():
    np.testing.assert_array_equal(central_difference(lambda t: 4.2, np.ones(3)), np.zeros(3))


def test_relu_away_from_kink():
    assert central_difference(lambda t: max(t, 0.0), 1.0) == pytest.approx(1.0)


def test_non_finite_value_names_coordinate():
    with pytest.raises(FloatingPointError, match="coordinate 1"):
        central_difference(lambda t: np.inf if t[1] > 1 else 0.0, np.array([0.0, 1.0]))


def test_theta_is_not_modified():
    theta = np.array([1.0, 2.0])
    central_difference(lambda t: float(t @ t), theta)
    assert theta.tolist() == [1.0, 2.0]


def test_relative_error_floor():
    assert relative_error(0.0, 0.0) == 0.0
    assert relative_error(1e-12, 0.0) == pytest.approx(1e-4)
    assert relative_error(2.0, 1.0) == pytest.approx(0.5)


def test_reference_loss_agrees_with_network(rng):
    net = MaxoutNetwork(6, (9, 9), 3, 4, 0.8, 0.5, random_state=rng).train()
    X, y = rng.standard_normal((5, 6)), rng.integers(0, 4, 5)
    loss = softmax_cross_entropy(net.forward(X, rng), y)[0]
    masks = [d.mask for d in net.dropouts]
    ref = reference_loss(net.get_state(), masks, [0.8, 0.5, 0.5], False, 3, X, y, np.float64)
    assert ref == pytest.approx(loss, rel=1e-12)


def _random_case(seed, pool=3, keep=(0.8, 0.5), widths=(12, 12), inverted=False):
    rng = np.random.default_rng(seed)
    net = MaxoutNetwork(8, widths, pool, 4, *keep, inverted_dropout=inverted, random_state=rng)
    return net, rng.standard_normal((4, 8)), rng.integers(0, 4, 4), rng


@pytest.mark.parametrize("seed", range(5))
def test_identity_pooling_network(seed):
    net, X, y, rng = _random_case(seed, pool=1, keep=(1.0, 1.0))
    report = check_network(net, X, y, rng=rng)
    assert report.max_error < 1e-7
    assert report.rerandomized == 0


@pytest.mark.parametrize("inverted", [False, True])
def test_maxout_network_with_frozen_masks(inverted):
    net, X, y, rng = _random_case(1, inverted=inverted)
    report = check_network(net, X, y, rng=rng)
    assert report.max_error < 1e-4
    assert set(report.block_errors) == {"W0", "b0", "W1", "b1", "W2", "b2"}
    assert report.n_checked == sum(p.size for p in net.get_state())


def test_tie_rejection_redraws_parameters():
    net, X, y, rng = _random_case(2)
    # duplicate a presynaptic column so group 0 ties exactly
    first = net.hidden[0][0]
    first.W[:, 1] = first.W[:, 0]
    first.b[1] = first.b[0]
    report = check_network(net, X, y, rng=rng, tie_tolerance=1e-3)
    assert report.rerandomized >= 1
    net.freeze_masks(True)
    assert pooling_gap(net, X) >= 1e-3
    assert report.max_error < 1e-4


def test_requires_float64():
    net = MaxoutNetwork(4, (4,), 2, 2, dtype=np.float32, random_state=0)
    with pytest.raises(ValueError):
        check_network(net, np.zeros((2, 4)), np.array([0, 1]))


def test_error_shrinks_with_eps_on_smooth_network():
    errors = []
    for eps in (1e-3, 1e-4, 1e-5):
        net, X, y, rng = _random_case(3, pool=1, keep=(1.0, 1.0))
        errors.append(check_network(net, X, y, eps=eps, rng=rng).max_error)
    assert errors[0] >= errors[1] >= errors[2]


def test_masks_are_unfrozen_afterwards():
    net, X, y, rng = _random_case(4)
    check_network(net, X, y, rng=rng)
    assert not any(d.frozen for d in net.dropouts)


def test_report_table():
    report = GradCheckReport({"W0": 1e-9}, 1e-9, 1e-5, 0, 10)
    assert "W0" in report.table() and report.passed(1e-8) and not report.passed(1e-10)
