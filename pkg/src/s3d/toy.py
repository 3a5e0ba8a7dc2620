"""One-dimensional RBF curve fitting: growing a network toward a 15-neuron target."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import GrowthConfig, GrowthTrace, grow
from .errors import InvalidInputError
from .model import Dataset, MlpNetwork, OptimizerConfig, loss, single_layer

METHODS = ("s2d", "s3d")


@dataclass(frozen=True)
class ToyConfig:
    method: str = "s3d"
    m: int = 2
    c: float = 3.0
    seed: int = 0
    true_neurons: int = 15
    weight_std: float = 3.0
    n_samples: int = 1000
    x_range: tuple = (-5.0, 5.0)
    adam_lr: float = 0.005
    steps_per_copy: int = 10_000
    rounds: int | None = None
    epsilon: float = 0.05
    log_every: int = 100

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidInputError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.m not in (2, 3, 4):
            raise InvalidInputError(f"m must be 2, 3 or 4, got {self.m}")
        if not self.c >= 1:
            raise InvalidInputError(f"c must be >= 1, got {self.c}")
        lo, hi = self.x_range
        if not lo < hi:
            raise InvalidInputError(f"x_range must be increasing, got {self.x_range}")
        object.__setattr__(self, "x_range", (float(lo), float(hi)))
        if self.rounds is not None and self.rounds < 0:
            raise InvalidInputError(f"rounds must be >= 0, got {self.rounds}")

    @property
    def copies(self) -> int:
        # positive-only splitting always uses two copies
        return 2 if self.method == "s2d" else self.m

    @property
    def growth_rounds(self) -> int:
        """Rounds needed to grow one neuron to about ``true_neurons``."""
        if self.rounds is not None:
            return self.rounds
        return int(round((self.true_neurons - 1) / (self.copies - 1)))

    def growth_config(self) -> GrowthConfig:
        fixed = self.method == "s3d"
        return GrowthConfig(
            c=self.c if fixed else 1.0,
            epsilon=self.epsilon,
            rounds=self.growth_rounds,
            scheme_mode="fixed" if fixed else "positive-only",
            m=self.copies,
            selection="one-per-round",
            parametric=OptimizerConfig(
                kind="adam", lr=self.adam_lr, steps=(self.copies - 1) * self.steps_per_copy, seed=self.seed
            ),
            log_every=self.log_every,
            seed=self.seed,
        )


def ground_truth(cfg: ToyConfig) -> tuple[MlpNetwork, Dataset]:
    """Seeded target network and its noiseless samples (inputs carry a bias column)."""
    rng = np.random.default_rng([cfg.seed, 0])
    theta = rng.normal(0.0, cfg.weight_std, size=(cfg.true_neurons, 2))
    w = rng.normal(0.0, cfg.weight_std, size=cfg.true_neurons)
    target = single_layer("rbf", theta, w)
    x = rng.uniform(cfg.x_range[0], cfg.x_range[1], size=cfg.n_samples)
    inputs = np.column_stack([x, np.ones_like(x)])
    y = target.output_weights @ np.exp(-0.5 * (inputs @ theta.T).T ** 2)
    return target, Dataset(inputs, y)


def initial_network(cfg: ToyConfig) -> MlpNetwork:
    """One rbf neuron drawn from the seed; identical for both methods."""
    rng = np.random.default_rng([cfg.seed, 1])
    return single_layer("rbf", rng.normal(0.0, 1.0, size=(1, 2)), rng.normal(0.0, 1.0, size=1))


@dataclass
class ToyResult:
    config: ToyConfig
    network: MlpNetwork
    trace: GrowthTrace
    final_loss: float

    def summary(self) -> dict:
        trace = self.trace.to_dict()
        splits = [
            {"round": r["round"], **s} for r in self.trace.rounds for s in r.get("splits", [])
        ]
        return {
            "experiment": "toy-rbf",
            "method": self.config.method,
            "m": self.config.copies,
            "c": self.config.c if self.config.method == "s3d" else 1.0,
            "seed": self.config.seed,
            "status": trace["status"],
            "iterations": trace["iterations"],
            "final_loss": self.final_loss,
            "final_neuron_count": self.network.neuron_count,
            "split_events": splits,
            "trace": trace,
        }


def run_toy(cfg: ToyConfig) -> ToyResult:
    _, data = ground_truth(cfg)
    net, trace = grow(initial_network(cfg), data, cfg.growth_config())
    return ToyResult(cfg, net, trace, loss(net, data))


def first_divergent_round(a: GrowthTrace, b: GrowthTrace):
    """Index of the first round whose chosen splits differ, or None."""
    for ra, rb in zip(a.rounds, b.rounds):
        sa = [(s["neuron"], s["variant"]) for s in ra.get("splits", [])]
        sb = [(s["neuron"], s["variant"]) for s in rb.get("splits", [])]
        if sa != sb:
            return ra["round"]
    if len(a.rounds) != len(b.rounds):
        return min(len(a.rounds), len(b.rounds))
    return None
