import numpy as np
import pytest

from s3d.errors import InvalidInputError
from s3d.model import loss, predict
from s3d.toy import ToyConfig, first_divergent_round, ground_truth, initial_network, run_toy

TINY = dict(steps_per_copy=60, rounds=3, n_samples=80, log_every=20)


def test_defaults_follow_the_experiment():
    cfg = ToyConfig()
    assert (cfg.true_neurons, cfg.weight_std, cfg.n_samples, cfg.x_range, cfg.adam_lr) == (15, 3.0, 1000, (-5.0, 5.0), 0.005)
    assert cfg.growth_config().parametric.steps == 10_000


@pytest.mark.parametrize("method,m,rounds,steps", [("s2d", 4, 14, 10_000), ("s3d", 2, 14, 10_000), ("s3d", 3, 7, 20_000), ("s3d", 4, 5, 30_000)])
def test_rounds_and_steps(method, m, rounds, steps):
    cfg = ToyConfig(method=method, m=m)
    g = cfg.growth_config()
    assert (cfg.growth_rounds, g.parametric.steps, g.m) == (rounds, steps, cfg.copies)
    assert g.scheme_mode == ("positive-only" if method == "s2d" else "fixed")


def test_ground_truth_is_seeded_and_exact():
    target, data = ground_truth(ToyConfig(seed=4))
    again = ground_truth(ToyConfig(seed=4))[1]
    assert np.array_equal(data.inputs, again.inputs) and np.array_equal(data.targets, again.targets)
    assert target.neuron_count == 15 and data.n == 1000 and np.all(data.inputs[:, 1] == 1.0)
    assert np.all(np.abs(data.inputs[:, 0]) <= 5.0)
    assert loss(target, data) < 1e-28
    np.testing.assert_allclose(predict(target, data.inputs), data.targets, rtol=1e-12, atol=1e-12)


def test_initial_network_shared_by_methods():
    a = initial_network(ToyConfig(method="s2d", seed=2))
    b = initial_network(ToyConfig(method="s3d", seed=2, m=4))
    assert a.neuron_count == 1 and np.array_equal(a.layers[0], b.layers[0])


def test_config_validation():
    for bad in (dict(method="x"), dict(m=5), dict(c=0.5), dict(x_range=(1.0, -1.0)), dict(rounds=-1)):
        with pytest.raises(InvalidInputError):
            ToyConfig(**bad)


def test_c_one_matches_positive_only():
    a = run_toy(ToyConfig(method="s2d", seed=1, **TINY))
    b = run_toy(ToyConfig(method="s3d", m=2, c=1.0, seed=1, **TINY))
    assert a.trace.rows == b.trace.rows
    assert first_divergent_round(a.trace, b.trace) is None


def test_summary_fields():
    res = run_toy(ToyConfig(seed=0, **TINY))
    s = res.summary()
    assert s["final_loss"] == res.final_loss and s["final_neuron_count"] == res.network.neuron_count
    assert all({"round", "neuron", "variant", "G"} <= set(e) for e in s["split_events"])
