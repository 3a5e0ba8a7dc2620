"""Independent finite-difference oracles shared by the test modules."""

import numpy as np

from s3d.model import Dataset, loss, random_network, with_weights


def flat_params(net):
    return np.concatenate([w.ravel() for w in net.layers] + [net.output_weights])


def from_flat(net, theta):
    layers, k = [], 0
    for w in net.layers:
        layers.append(theta[k : k + w.size].reshape(w.shape))
        k += w.size
    return with_weights(net, layers=layers, output_weights=theta[k:])


def fd_grad(net, data, step=1e-5):
    theta = flat_params(net)
    g = np.zeros_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = step
        g[i] = (loss(from_flat(net, theta + e), data) - loss(from_flat(net, theta - e), data)) / (2 * step)
    return g


def rel_err(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-8))


def random_case(rng, activation=None, loss_kind="mse", depth=None):
    activation = activation or str(rng.choice(["rbf", "tanh", "softplus"]))
    depth = depth or int(rng.integers(1, 3))
    d = int(rng.integers(1, 4))
    widths = [int(rng.integers(1, 4)) for _ in range(depth)]
    net = random_network(rng, d, widths, activation=activation, loss_kind=loss_kind)
    x = rng.normal(size=(int(rng.integers(3, 8)), d))
    y = rng.integers(0, 2, size=x.shape[0]).astype(float) if loss_kind == "bce" else rng.normal(size=x.shape[0])
    return net, Dataset(x, y)
