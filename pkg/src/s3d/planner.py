"""Choosing which neurons to split and into how many copies."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from .errors import InvalidInputError
from .splitting import NeuronSplitReport, SplitScheme, no_split

MULTIPLICITIES = (1, 2, 3, 4)


def rank_candidates(items, eta: float = 0.0, top_fraction: float = 1.0) -> list:
    """Filter ``(gain, neuron, ...)`` tuples to gain ≤ −eta (and < 0), sort, truncate.

    Sorting is by gain then neuron id; ⌈top_fraction · count⌉ items are kept.
    """
    if not 0.0 < top_fraction <= 1.0:
        raise InvalidInputError(f"top_fraction must be in (0, 1], got {top_fraction}")
    if eta < 0:
        raise InvalidInputError(f"eta must be >= 0, got {eta}")
    keep = sorted((it for it in items if it[0] <= -eta and it[0] < 0), key=lambda it: (it[0], it[1]))
    return keep[: math.ceil(top_fraction * len(keep))]


def rank_neurons(
    reports: list[NeuronSplitReport], m: int, eta: float = 0.0, top_fraction: float = 1.0
) -> list[str]:
    """Neurons with G_m ≤ −eta, most negative first, truncated to the top fraction.

    Ties are broken by neuron id. A zero gain never qualifies, even with eta = 0.
    """
    if not reports:
        raise InvalidInputError("no reports to rank")
    ranked = rank_candidates([(r.gain(m), r.neuron) for r in reports], eta, top_fraction)
    return [neuron for _, neuron in ranked]


@dataclass(frozen=True)
class SplitPlan:
    """Chosen multiplicity per neuron; m = 1 keeps the neuron as it is."""

    choices: tuple  # (neuron id, m, SplitScheme)
    total_new_copies: int
    total_predicted_gain: float

    @property
    def multiplicities(self) -> dict:
        return {neuron: m for neuron, m, _ in self.choices}

    def to_dict(self) -> dict:
        return {
            "choices": [
                {"neuron": neuron, "m": m, "variant": s.variant, "predicted_gain": s.predicted_gain}
                for neuron, m, s in self.choices
            ],
            "total_new_copies": self.total_new_copies,
            "total_predicted_gain": self.total_predicted_gain,
        }


def gains_table(reports: list[NeuronSplitReport]) -> dict:
    """neuron → {m: G} with G₁ = 0, from the closed-form gains."""
    return {r.neuron: {1: 0.0, **{m: r.gain(m) for m in (2, 3, 4)}} for r in reports}


def _check_table(gains: dict, budget: int):
    if budget < len(gains):
        raise InvalidInputError(f"budget {budget} is below the neuron count {len(gains)}")
    for neuron, row in gains.items():
        missing = [m for m in MULTIPLICITIES if m not in row]
        if missing:
            raise InvalidInputError(f"gains for {neuron!r} lack multiplicities {missing}")
        if row[1] != 0.0:
            raise InvalidInputError(f"G_1 for {neuron!r} must be 0, got {row[1]}")


def _plan_key(total: Fraction, ms: tuple) -> tuple:
    return (total, sum(ms), ms)


def _exact(gains: dict) -> dict:
    # exact sums make ties between plans independent of summation order
    return {k: {m: Fraction(g) for m, g in row.items()} for k, row in gains.items()}


def knapsack_plan(gains: dict, budget: int, reports: list[NeuronSplitReport] | None = None) -> SplitPlan:
    """Minimize Σ G_{m_ℓ,ℓ} subject to Σ m_ℓ ≤ budget, exactly.

    Dynamic programming over (neuron, budget used). Among optimal plans the
    one with fewer total copies wins, then the lexicographically smaller
    multiplicity vector (neurons in the table's order). When ``reports`` is
    given the plan carries their schemes; otherwise schemes are placeholders.
    """
    _check_table(gains, budget)
    exact = _exact(gains)
    ids = list(gains)
    n = len(ids)
    # best[k][b]: optimal key for neurons k.. using exactly b more copies
    inf = (math.inf, math.inf, ())
    best = [[inf] * (budget + 1) for _ in range(n + 1)]
    best[n][0] = (Fraction(0), 0, ())
    for k in range(n - 1, -1, -1):
        row = exact[ids[k]]
        for b in range(budget + 1):
            cand = inf
            for m in MULTIPLICITIES:
                if m > b or best[k + 1][b - m][0] == math.inf:
                    continue
                tail = best[k + 1][b - m]
                key = _plan_key(row[m] + tail[0], (m,) + tail[2])
                if key < cand:
                    cand = key
            best[k][b] = cand
    top = min(best[0][b] for b in range(budget + 1))
    return _make_plan(ids, top[2], gains, reports)


def exhaustive_plan(gains: dict, budget: int) -> SplitPlan:
    """Reference solver: enumerate every multiplicity vector."""
    _check_table(gains, budget)
    exact = _exact(gains)
    ids = list(gains)
    grid = np.array(list(product(MULTIPLICITIES, repeat=len(ids))), dtype=int).reshape(-1, len(ids))
    grid = grid[grid.sum(axis=1) <= budget]
    table = np.array([[gains[k][m] for m in MULTIPLICITIES] for k in ids]).reshape(len(ids), 4)
    approx = table[np.arange(len(ids)), grid - 1].sum(axis=1)
    # float sums only shortlist; the exact key decides among near-ties
    lo = approx.min()
    near = grid[approx <= lo + 1e-9 * (1.0 + abs(lo))]
    top = None
    for ms in map(tuple, near.tolist()):
        total = sum((exact[neuron][m] for neuron, m in zip(ids, ms)), Fraction(0))
        key = _plan_key(total, ms)
        if top is None or key < top:
            top = key
    return _make_plan(ids, top[2], gains, None)


def _make_plan(ids, ms, gains, reports) -> SplitPlan:
    by_id = {r.neuron: r for r in reports} if reports else {}
    choices = []
    total = Fraction(0)
    for neuron, m in zip(ids, ms):
        g = gains[neuron][m]
        total += Fraction(g)
        rep = by_id.get(neuron)
        if rep is None or m == 1:
            dim = rep.spectrum.dim if rep is not None else 1
            scheme = no_split(dim) if m == 1 else _placeholder(m, g)
        else:
            scheme = rep.gains[m][1]
        choices.append((neuron, m, scheme))
    return SplitPlan(tuple(choices), int(sum(ms)), float(total) + 0.0)


def _placeholder(m: int, gain: float) -> SplitScheme:
    return SplitScheme(m, np.full(m, 1.0 / m), np.zeros((m, 1)), float(gain), "none")
