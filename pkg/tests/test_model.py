import numpy as np
import pytest
from helpers import fd_grad, random_case, rel_err

from s3d.errors import InvalidInputError, NeuronNotFoundError
from s3d.model import (
    ACTIVATIONS,
    Dataset,
    MlpNetwork,
    OptimizerConfig,
    forward,
    grad_params,
    likelihood,
    loss,
    neuron_signals,
    parametric_train,
    predict,
    residuals,
    single_layer,
)
from s3d.toy import ToyConfig, ground_truth


@pytest.mark.parametrize("name", sorted(ACTIVATIONS))
def test_activation_derivatives(name, rng):
    act = ACTIVATIONS[name]
    t = rng.uniform(-5, 5, size=100)
    h = 1e-5
    s, ds, d2s = act.evaluate(t)
    fd1 = (act(t + h) - act(t - h)) / (2 * h)
    fd2 = (act.evaluate(t + h)[1] - act.evaluate(t - h)[1]) / (2 * h)
    assert np.max(np.abs(fd1 - ds) / np.maximum(np.abs(ds), 1e-3)) <= 1e-6
    assert np.max(np.abs(fd2 - d2s) / np.maximum(np.abs(d2s), 1e-3)) <= 1e-6
    np.testing.assert_array_equal(act.value_and_slope(t)[1], ds)


def test_rbf_at_zero():
    assert ACTIVATIONS["rbf"].evaluate(0.0) == (1.0, -0.0, -1.0)


def test_forward_zero_preactivation():
    net = single_layer("rbf", [[0.0, 0.0]], [1.0])
    assert forward(net, [1.0, 0.0]) == 1.0


def test_forward_cancellation(rng):
    net = single_layer("rbf", [[0.3, -0.2], [0.3, -0.2]], [1.0, -1.0])
    for x in rng.normal(size=(10, 2)):
        assert forward(net, x) == 0.0


def test_forward_toy_target_at_zero():
    target, _ = ground_truth(ToyConfig(seed=0))
    theta, w = target.layers[0], target.output_weights
    expected = sum(wi * np.exp(-0.5 * th[1] ** 2) for th, wi in zip(theta, w))
    assert np.isclose(forward(target, [0.0, 1.0]), expected, rtol=1e-14)


def test_forward_dimension_mismatch():
    with pytest.raises(InvalidInputError):
        forward(single_layer("tanh", [[1.0, 2.0]], [1.0]), [1.0])


def test_loss_examples():
    net = single_layer("rbf", [[0.0, 0.0]], [1.0])
    assert loss(net, Dataset([[1.0, 0.0]], [1.0])) == 0.0
    assert loss(net, Dataset([[1.0, 0.0]], [0.0])) == 0.5
    zero = single_layer("tanh", [[0.0]], [1.0], loss_kind="bce")
    assert np.isclose(loss(zero, Dataset([[1.0]], [1.0])), np.log(2.0))


def test_empty_and_mismatched_data():
    with pytest.raises(InvalidInputError):
        Dataset(np.zeros((0, 2)), [])
    with pytest.raises(InvalidInputError):
        loss(single_layer("tanh", [[1.0, 2.0]], [1.0]), Dataset([[1.0]], [0.0]))


def test_invalid_networks():
    with pytest.raises(InvalidInputError):
        MlpNetwork("tanh", "mse", ([[1.0]], [[1.0, 2.0]]), [1.0])
    with pytest.raises(InvalidInputError):
        single_layer("tanh", [[np.inf]], [1.0])
    with pytest.raises(InvalidInputError):
        single_layer("relu", [[1.0]], [1.0])


def test_grad_zero_at_perfect_fit():
    net = single_layer("tanh", [[0.7, -0.1]], [1.3])
    x = np.array([[0.2, 1.0], [1.0, -0.4]])
    data = Dataset(x, predict(net, x))
    assert np.all(grad_params(net, data).flat() == 0.0)


def test_grad_hand_example():
    net = single_layer("rbf", [[0.0, 0.0]], [1.0])
    g = grad_params(net, Dataset([[1.0, 0.0]], [0.0]))
    np.testing.assert_array_equal(g.layers[0], [[0.0, 0.0]])
    assert g.output_weights[0] == 1.0


@pytest.mark.parametrize("loss_kind", ["mse", "bce"])
def test_grad_matches_finite_differences(loss_kind, rng):
    for _ in range(20):
        net, data = random_case(rng, loss_kind=loss_kind)
        assert rel_err(grad_params(net, data).flat(), fd_grad(net, data)) <= 1e-5


def test_neuron_signals_depth_one(rng):
    net, data = random_case(rng, depth=1)
    for k, neuron in enumerate(net.neuron_ids):
        sig = neuron_signals(net, data, neuron)
        assert np.all(sig.dfdsigma == net.output_weights[k])
        np.testing.assert_array_equal(sig.z, data.inputs)


def test_neuron_signals_zero_weights():
    net = single_layer("tanh", [[0.0, 0.0], [1.0, 1.0]], [1.0, 1.0])
    sig = neuron_signals(net, Dataset([[1.0, 2.0], [3.0, -1.0]], [0.0, 0.0]), "h0_0")
    assert np.all(sig.h == 0.0)


def test_neuron_signals_depth_two_finite_difference(rng):
    net, data = random_case(rng, activation="tanh", depth=2)
    data = Dataset(data.inputs[:1], data.targets[:1])
    layer0 = net.layers[0]
    x = data.inputs[0]
    for neuron in net.ids[0]:
        _, idx = net.locate(neuron)
        sig = neuron_signals(net, data, neuron)
        a = np.tanh(layer0 @ x)

        def out(bump):
            b = a.copy()
            b[idx] += bump
            return net.output_weights @ np.tanh(net.layers[1] @ b)

        fd = (out(1e-6) - out(-1e-6)) / 2e-6
        assert abs(sig.dfdsigma[0] - fd) <= 1e-7 * max(1.0, abs(fd))
        assert np.isclose(sig.h[0], layer0[idx] @ x)


def test_unknown_neuron():
    with pytest.raises(NeuronNotFoundError):
        neuron_signals(single_layer("tanh", [[1.0]], [1.0]), Dataset([[1.0]], [0.0]), "nope")


def test_train_zero_steps():
    net = single_layer("tanh", [[0.5]], [1.0])
    data = Dataset([[1.0]], [0.2])
    out, trace = parametric_train(net, data, OptimizerConfig(steps=0))
    assert out == net or np.array_equal(out.layers[0], net.layers[0])
    assert trace == [loss(net, data)]


def test_gd_monotone_on_constant_target():
    net = single_layer("tanh", [[0.1, 0.1]], [0.5])
    x = np.column_stack([np.linspace(-1, 1, 9), np.ones(9)])
    _, trace = parametric_train(net, Dataset(x, np.full(9, 0.3)), OptimizerConfig(kind="gd", lr=0.05, steps=200))
    assert len(trace) == 201
    assert all(b < a for a, b in zip(trace, trace[1:]))


def test_frozen_output_weights(rng):
    net, data = random_case(rng)
    out, _ = parametric_train(net, data, OptimizerConfig(steps=100, freeze_output_weights=True))
    assert np.array_equal(out.output_weights, net.output_weights)
    assert not np.array_equal(out.layers[0], net.layers[0])


def test_training_reproducible(rng):
    net, data = random_case(rng)
    cfg = OptimizerConfig(steps=50, seed=3)
    a, ta = parametric_train(net, data, cfg)
    b, tb = parametric_train(net, data, cfg)
    assert ta == tb and np.array_equal(a.output_weights, b.output_weights)


def test_bad_learning_rate():
    with pytest.raises(InvalidInputError):
        OptimizerConfig(lr=0.0)


def test_likelihood_examples(rng):
    zero = single_layer("tanh", [[0.0]], [1.0], loss_kind="bce")
    labels = Dataset([[1.0], [2.0], [3.0]], [0.0, 1.0, 1.0])
    assert likelihood(zero, labels) == 0.5
    # tanh(10) * 10 ≈ 10 on every sample
    big = single_layer("tanh", [[10.0]], [10.0], loss_kind="bce")
    ones = Dataset([[1.0], [2.0]], [1.0, 1.0])
    assert np.isclose(likelihood(big, ones), 1.0 / (1.0 + np.exp(-10.0 * np.tanh(10.0))), rtol=1e-12)
    assert abs(likelihood(big, ones) - 0.99995) < 1e-5


def test_likelihood_residual_relation(rng):
    for _ in range(20):
        net, data = random_case(rng, loss_kind="bce")
        lik = likelihood(net, data)
        assert 0.0 <= lik <= 1.0
        assert lik >= 1.0 - np.mean(np.abs(residuals(net, data))) - 1e-12
        assert loss(net, data) >= 0.0


def test_likelihood_rejects_regression():
    net = single_layer("tanh", [[1.0]], [1.0], loss_kind="bce")
    with pytest.raises(InvalidInputError):
        likelihood(net, Dataset([[1.0]], [0.5]))
    with pytest.raises(InvalidInputError):
        likelihood(single_layer("tanh", [[1.0]], [1.0]), Dataset([[1.0]], [1.0]))
