"""Randomized verification suites with machine-readable pass/fail reports."""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError
from .model import Dataset, random_network
from .numerics import rayleigh_extremes, spectral_extremes
from .oracle import brute_force_gain
from .planner import exhaustive_plan, knapsack_plan
from .splitting import GAIN_FUNCTIONS, gain_positive, negative_binary, splitting_matrix, verify_taylor
from .theory import TheoryContext, admissible_instance, check_likelihood_bound, check_mse_bound, kappa

GAIN_TOL = 1e-3
CHAIN_TOL = 1e-12
EIGEN_TOL = 1e-4
TAYLOR_EPS = (1e-1, 3e-2, 1e-2, 3e-3)
TAYLOR_RANGE = (2.5, 3.5)
C_VALUES = (1.0, 1.5, 2.0, 3.0)


def random_symmetric(rng: np.random.Generator, dims=(2, 3, 4)) -> np.ndarray:
    d = int(rng.choice(dims))
    a = rng.standard_normal((d, d))
    return (a + a.T) / 2.0


def taylor_instance(rng: np.random.Generator, c: float = 3.0, min_gain: float = 1e-2):
    """Random one-hidden-layer tanh regression with a clearly negative binary gain.

    Returns ``(net, data, neuron, scheme)`` where the scheme is the negative
    binary split of the neuron with the largest λmax.
    """
    while True:
        d = int(rng.integers(2, 4))
        net = random_network(rng, d + 1, [int(rng.integers(2, 5))], activation="tanh")
        x = rng.uniform(-2.0, 2.0, size=(30, d))
        data = Dataset(x, rng.normal(0.0, 1.0, size=30)).with_bias()
        best = None
        for neuron in net.neuron_ids:
            spec = spectral_extremes(splitting_matrix(net, data, neuron))
            if best is None or spec.lambda_max > best[1].lambda_max:
                best = (neuron, spec)
        scheme = negative_binary(best[1], c)
        if scheme.predicted_gain <= -min_gain:
            return net, data, best[0], scheme


def _result(trials, failures, worst, tol, **extra) -> dict:
    return {
        "trials": trials,
        "failures": int(failures),
        "worst": float(worst),
        "tolerance": tol,
        "worst_margin": float(tol - worst),
        **extra,
    }


def suite_gains(trials: int, seed: int) -> dict:
    """Closed forms against the brute-force search, plus the gain chain and ρ bounds."""
    rng = np.random.default_rng(seed)
    failures = chain_failures = 0
    worst = 0.0
    by_m = {m: {"failures": 0, "worst": 0.0} for m in GAIN_FUNCTIONS}
    for t in range(trials):
        s = random_symmetric(rng)
        spec = spectral_extremes(s)
        scale = max(1.0, spec.rho)
        g_pos = gain_positive(s, spectrum=spec)[0]
        for c in C_VALUES:
            g = {m: fn(s, c, spectrum=spec)[0] for m, fn in GAIN_FUNCTIONS.items()}
            ok = g[4] <= g[3] + CHAIN_TOL and g[3] <= g[2] + CHAIN_TOL and g[2] <= g_pos + CHAIN_TOL
            ok = ok and g_pos <= 0.0
            ok = ok and all(g[m] <= -kappa(m, c) * spec.rho + CHAIN_TOL * scale for m in g)
            chain_failures += not ok
            for m in g:
                err = abs(brute_force_gain(s, m, c, seed=seed + t) - g[m]) / scale
                worst = max(worst, err)
                by_m[m]["worst"] = max(by_m[m]["worst"], err)
                if err > GAIN_TOL:
                    failures += 1
                    by_m[m]["failures"] += 1
    return _result(
        trials * len(C_VALUES) * len(GAIN_FUNCTIONS),
        failures + chain_failures,
        worst,
        GAIN_TOL,
        oracle_failures=failures,
        chain_failures=chain_failures,
        by_m={str(m): v for m, v in by_m.items()},
    )


def suite_taylor(trials: int, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    lo, hi = TAYLOR_RANGE
    failures = 0
    worst = 0.0
    slopes = []
    for _ in range(trials):
        net, data, neuron, scheme = taylor_instance(rng)
        slope = verify_taylor(net, data, neuron, scheme, TAYLOR_EPS)
        slopes.append(slope)
        dev = max(lo - slope, slope - hi, 0.0)
        worst = max(worst, abs(slope - 3.0))
        failures += dev > 0
    return _result(trials, failures, worst, 0.5, slopes=slopes)


def suite_bounds(trials: int, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    failures = skipped = checks = 0
    worst = -np.inf
    for kind, check in (("mse", check_mse_bound), ("bce", check_likelihood_bound)):
        for _ in range(trials):
            net, data = admissible_instance(rng, kind)
            ctx = TheoryContext.build(net, data, eta=0.1, c=3.0)
            for b in check(net, data, ctx):
                if b.skipped_reason:
                    skipped += 1
                    continue
                checks += 1
                # violation amount; negative means the bound holds with room
                gap = b.actual - b.bound if kind == "mse" else b.bound - b.actual
                worst = max(worst, gap)
                failures += not b.holds
    return _result(2 * trials, failures, float(worst), 1e-9, checks=checks, skipped=skipped)


def random_gains_table(rng: np.random.Generator, neurons: int) -> dict:
    table = {}
    for k in range(neurons):
        vals = -np.sort(rng.exponential(size=3)) * rng.choice([0.0, 1.0, 1.0])
        table[f"n{k}"] = {1: 0.0, 2: float(vals[0]), 3: float(vals[1]), 4: float(vals[2])}
    return table


def suite_knapsack(trials: int, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    failures = 0
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, 9))
        budget = int(rng.integers(n, 4 * n + 1))
        table = random_gains_table(rng, n)
        a, b = knapsack_plan(table, budget), exhaustive_plan(table, budget)
        gap = abs(a.total_predicted_gain - b.total_predicted_gain)
        worst = max(worst, gap)
        failures += gap != 0.0 or a.multiplicities != b.multiplicities
    return _result(trials, failures, worst, 0.0)


def suite_eigen(trials: int, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    failures = 0
    worst = 0.0
    for t in range(trials):
        s = random_symmetric(rng, dims=range(1, 17))
        exact = np.linalg.eigvalsh(s)
        approx = rayleigh_extremes(s, seed=seed + t)
        scale = max(1.0, float(np.abs(exact).max()))
        err = max(abs(approx.lambda_min - exact[0]), abs(approx.lambda_max - exact[-1])) / scale
        worst = max(worst, err)
        failures += err > EIGEN_TOL
    return _result(trials, failures, worst, EIGEN_TOL)


SUITES = {
    "gains": suite_gains,
    "taylor": suite_taylor,
    "bounds": suite_bounds,
    "knapsack": suite_knapsack,
    "eigen": suite_eigen,
}


def run_verify(suite: str, trials: int, seed: int = 0) -> dict:
    """Run one suite (or ``all``) and return ``{suite: report}``."""
    if trials < 1:
        raise InvalidInputError(f"trials must be >= 1, got {trials}")
    names = list(SUITES) if suite == "all" else [suite]
    for name in names:
        if name not in SUITES:
            raise InvalidInputError(f"unknown suite {name!r}; expected one of {sorted(SUITES)} or 'all'")
    return {name: SUITES[name](trials, seed) for name in names}


def passed(report: dict) -> bool:
    return all(r["failures"] == 0 for r in report.values())
