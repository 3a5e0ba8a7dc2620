"""Progressive growth: alternate parametric training with neuron splitting."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import partial

from .errors import InvalidInputError, PropertyViolation
from .model import Dataset, MlpNetwork, OptimizerConfig, loss, parametric_train
from .numerics import rayleigh_extremes, spectral_extremes
from .planner import gains_table, knapsack_plan, rank_candidates
from .splitting import SplitScheme, apply_split, split_reports
from .theory import TheoryContext, check_mse_bound

SCHEME_MODES = ("fixed", "positive-only", "best-of", "knapsack")
SELECTIONS = ("threshold", "one-per-round")
BACKENDS = ("exact", "rayleigh")
DESCENT_EPS0 = 0.2
DESCENT_STEPS = 12
DESCENT_MIN_GAIN = 1e-6


@dataclass(frozen=True)
class GrowthConfig:
    """Knobs of the growth loop.

    ``scheme_mode`` picks the gain used per neuron: ``fixed`` uses G_m for the
    configured ``m``, ``positive-only`` the positive binary gain, ``best-of``
    the smallest G over m ∈ {2, 3, 4} and ``knapsack`` an exact plan adding at
    most ``budget`` neurons per round. ``stop_eta = 0`` disables the loss
    target.
    """

    c: float = 1.0
    epsilon: float = 0.1
    rounds: int = 0
    scheme_mode: str = "fixed"
    m: int = 2
    budget: int = 1
    selection: str = "one-per-round"
    eta: float = 0.0
    top_fraction: float = 1.0
    eigen_backend: str = "exact"
    rayleigh: dict = field(default_factory=dict)
    parametric: OptimizerConfig = field(default_factory=OptimizerConfig)
    final_train: bool = True
    stop_eta: float = 0.0
    analysis_mode: bool = False
    bound_eta: float = 0.1
    log_every: int = 100
    seed: int = 0

    def __post_init__(self):
        if not self.c >= 1:
            raise InvalidInputError(f"c must be >= 1, got {self.c}")
        if not self.epsilon > 0:
            raise InvalidInputError(f"epsilon must be positive, got {self.epsilon}")
        if self.rounds < 0:
            raise InvalidInputError(f"rounds must be >= 0, got {self.rounds}")
        if self.scheme_mode not in SCHEME_MODES:
            raise InvalidInputError(f"scheme_mode must be one of {SCHEME_MODES}, got {self.scheme_mode!r}")
        if self.m not in (2, 3, 4):
            raise InvalidInputError(f"m must be 2, 3 or 4, got {self.m}")
        if self.budget < 0:
            raise InvalidInputError(f"budget must be >= 0, got {self.budget}")
        if self.selection not in SELECTIONS:
            raise InvalidInputError(f"selection must be one of {SELECTIONS}, got {self.selection!r}")
        if self.eigen_backend not in BACKENDS:
            raise InvalidInputError(f"eigen_backend must be one of {BACKENDS}, got {self.eigen_backend!r}")
        if self.eta < 0 or self.stop_eta < 0:
            raise InvalidInputError("eta and stop_eta must be >= 0")
        if not 0 < self.top_fraction <= 1:
            raise InvalidInputError(f"top_fraction must be in (0, 1], got {self.top_fraction}")
        if self.log_every < 1:
            raise InvalidInputError(f"log_every must be >= 1, got {self.log_every}")
        if isinstance(self.parametric, dict):
            object.__setattr__(self, "parametric", OptimizerConfig(**self.parametric))
        if self.analysis_mode and not self.parametric.freeze_output_weights:
            frozen = OptimizerConfig(**{**asdict(self.parametric), "freeze_output_weights": True})
            object.__setattr__(self, "parametric", frozen)

    def backend(self):
        if self.eigen_backend == "exact":
            return spectral_extremes
        return partial(rayleigh_extremes, **{"seed": self.seed, **self.rayleigh})

    def to_dict(self) -> dict:
        out = asdict(self)
        out["parametric"] = asdict(self.parametric)
        return out


@dataclass
class GrowthTrace:
    """Per-round audit records, loss-curve rows and the stopping status."""

    config: dict
    rounds: list = field(default_factory=list)
    rows: list = field(default_factory=list)  # (iteration, neuron_count, train_loss, event)
    status: str = "rounds-exhausted"
    iterations: int = 0

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "seed": self.config["seed"],
            "status": self.status,
            "iterations": self.iterations,
            "final_loss": self.rows[-1][2] if self.rows else math.nan,
            "final_neuron_count": self.rows[-1][1] if self.rows else 0,
            "rounds": self.rounds,
        }


@dataclass(frozen=True)
class DescentCheck:
    epsilon: float
    realized: float
    predicted: float
    tried: int


def descent_schedule(eps0: float = DESCENT_EPS0, steps: int = DESCENT_STEPS) -> list[float]:
    return [eps0 * 0.5**k for k in range(steps)]


def single_split_descent_check(
    net: MlpNetwork, data: Dataset, neuron: str, scheme: SplitScheme, epsilons=None
) -> DescentCheck:
    """Try ε₀, ε₀/2, … until the split strictly lowers the loss.

    Raises :class:`PropertyViolation` if no ε in the list works, which would
    mean the reported gain does not describe the true loss change.
    """
    if not scheme.predicted_gain <= -DESCENT_MIN_GAIN:
        raise InvalidInputError(f"scheme gain {scheme.predicted_gain} is not below -{DESCENT_MIN_GAIN}")
    eps_list = descent_schedule() if epsilons is None else list(epsilons)
    base = loss(net, data)
    for k, eps in enumerate(eps_list):
        delta = loss(apply_split(net, neuron, scheme, eps), data) - base
        if delta < 0:
            return DescentCheck(eps, delta, 0.5 * eps * eps * scheme.predicted_gain, k + 1)
    raise PropertyViolation(
        f"no epsilon in {eps_list} decreases the loss for neuron {neuron!r} (gain {scheme.predicted_gain})"
    )


def _candidates(reports, cfg: GrowthConfig):
    """(gain, neuron, scheme) for every neuron under the configured scheme mode."""
    out = []
    for r in reports:
        if cfg.scheme_mode == "positive-only":
            g, scheme = r.positive_gain
        elif cfg.scheme_mode == "best-of":
            m = min(r.gains, key=lambda k: (r.gains[k][0], k))
            g, scheme = r.gains[m]
        else:
            g, scheme = r.gains[cfg.m]
        if scheme.variant != "none":
            out.append((g, r.neuron, scheme))
    return out


def _select(net: MlpNetwork, reports, cfg: GrowthConfig):
    if cfg.scheme_mode == "knapsack":
        table = gains_table(reports)
        for row in table.values():
            for m in (2, 3, 4):
                if not row[m] <= -cfg.eta:
                    row[m] = 0.0
        plan = knapsack_plan(table, net.neuron_count + cfg.budget, reports)
        chosen = [(s.predicted_gain, n, s) for n, m, s in plan.choices if m > 1 and s.variant != "none"]
        return sorted(chosen, key=lambda it: (it[0], it[1]))
    ranked = rank_candidates(_candidates(reports, cfg), cfg.eta, cfg.top_fraction)
    if cfg.selection == "one-per-round":
        ranked = ranked[:1]
    return ranked


class _Recorder:
    def __init__(self, trace: GrowthTrace, log_every: int):
        self.trace = trace
        self.log_every = log_every

    def phase(self, start: int, losses: list, count: int):
        # losses[i] is the loss after i updates of this phase; index 0 was
        # already recorded as the previous row
        steps = len(losses) - 1
        for i in range(1, steps + 1):
            t = start + i
            if t % self.log_every == 0 or i == steps:
                self.trace.rows.append((t, count, float(losses[i]), "param"))

    def mark(self, iteration: int, count: int, value: float, event: str):
        # one row per iteration: an event replaces a plain row, or joins another event
        rows = self.trace.rows
        if rows and rows[-1][0] == iteration:
            if rows[-1][3] != "param":
                event = rows[-1][3] + "|" + event
            rows[-1] = (iteration, count, float(value), event)
        else:
            rows.append((iteration, count, float(value), event))


def grow(net: MlpNetwork, data: Dataset, config: GrowthConfig) -> tuple[MlpNetwork, GrowthTrace]:
    """Run the growth loop; see :class:`GrowthConfig` for the knobs.

    Each round trains, computes every neuron's splitting report, selects and
    splits. A round that selects nothing ends the run as ``splitting-stable``;
    reaching ``stop_eta`` ends it as ``loss-target``. After the last round a
    final training phase runs when ``final_train`` is set.
    """
    if data.d != net.input_dim:
        raise InvalidInputError(f"dataset has {data.d} features, network expects {net.input_dim}")
    cfg = config
    trace = GrowthTrace(config=cfg.to_dict())
    rec = _Recorder(trace, cfg.log_every)
    backend = cfg.backend()
    it = 0
    rec.mark(0, net.neuron_count, loss(net, data), "param")
    trained_last = False
    for rnd in range(cfg.rounds):
        before = loss(net, data)
        net, losses = parametric_train(net, data, cfg.parametric)
        rec.phase(it, losses, net.neuron_count)
        it += cfg.parametric.steps
        after = losses[-1]
        record = {
            "round": rnd,
            "loss_before_parametric": before,
            "loss_after_parametric": after,
            "neuron_count": net.neuron_count,
            "iteration": it,
        }
        trace.rounds.append(record)
        trained_last = True
        if cfg.stop_eta > 0 and after <= cfg.stop_eta:
            trace.status = "loss-target"
            break
        reports = split_reports(net, data, cfg.c, backend)
        if cfg.analysis_mode:
            ctx = TheoryContext.build(net, data, eta=cfg.bound_eta, c=cfg.c)
            record["bound_checks"] = [b.to_dict() for b in check_mse_bound(net, data, ctx)]
        chosen = _select(net, reports, cfg)
        record["splits"] = []
        if not chosen:
            trace.status = "splitting-stable"
            break
        split_net = net
        for g, neuron, scheme in chosen:
            entry = {"neuron": neuron, "variant": scheme.variant, "m": scheme.m, "G": g}
            if g <= -DESCENT_MIN_GAIN:
                check = single_split_descent_check(net, data, neuron, scheme)
                entry["descent_epsilon"] = check.epsilon
            record["splits"].append(entry)
            split_net = apply_split(split_net, neuron, scheme, cfg.epsilon)
        net = split_net
        split_loss = loss(net, data)
        predicted = sum(g for g, _, _ in chosen)
        record["predicted_gain_sum"] = predicted
        record["predicted_loss_delta"] = 0.5 * cfg.epsilon**2 * predicted
        record["realized_loss_delta"] = split_loss - after
        record["neuron_count_after_split"] = net.neuron_count
        event = "split:" + "+".join(s.variant for _, _, s in chosen)
        rec.mark(it, net.neuron_count, split_loss, event)
        trained_last = False
    if cfg.final_train and not trained_last:
        net, losses = parametric_train(net, data, cfg.parametric)
        rec.phase(it, losses, net.neuron_count)
        it += cfg.parametric.steps
    trace.iterations = it
    last = trace.rows[-1]
    rec.mark(it, net.neuron_count, last[2] if last[0] == it else loss(net, data), "stop:" + trace.status)
    return net, trace
