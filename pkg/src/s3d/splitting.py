"""Splitting matrices and the optimal signed splitting schemes.

Splitting neuron θ into copies θ + εδᵢ whose outgoing weights are fractions wᵢ
of the original (Σwᵢ = 1, Σwᵢδᵢ = 0) changes the loss by
(ε²/2)·Σ wᵢ δᵢᵀ S δᵢ + O(ε³), where S is the neuron's splitting matrix.
Allowing negative fractions subject to Σ|wᵢ| ≤ c gives the closed-form optima
built below for two, three and four copies.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidInputError
from .model import (
    Dataset,
    MlpNetwork,
    loss,
    neuron_signals,
    residuals,
    with_weights,
)
from .numerics import SpectralSummary, as_symmetric, spectral_extremes

VARIANTS = (
    "none",
    "positive-binary",
    "negative-binary",
    "positive-triplet",
    "negative-triplet",
    "quartet",
)
SCHEME_TOL = 1e-12


@dataclass(frozen=True)
class SplitScheme:
    """How to split one neuron: weight fractions and unit-ball directions."""

    m: int
    weight_fractions: np.ndarray
    directions: np.ndarray
    predicted_gain: float
    variant: str
    c: float = 1.0

    @property
    def average_displacement(self) -> np.ndarray:
        return np.zeros(self.directions.shape[1])

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    def violations(self, s=None) -> list[str]:
        """Return a description of every violated scheme constraint."""
        w, d = self.weight_fractions, self.directions
        out = []
        if len(w) != self.m or d.shape[0] != self.m:
            out.append(f"arity mismatch: m={self.m}, {len(w)} weights, {d.shape[0]} directions")
            return out
        if abs(w.sum() - 1.0) > SCHEME_TOL:
            out.append(f"weights sum to {w.sum()!r}, not 1")
        if np.abs(w).sum() > self.c + SCHEME_TOL:
            out.append(f"sum |w| = {np.abs(w).sum()!r} exceeds c = {self.c}")
        norms = np.linalg.norm(d, axis=1)
        if np.any(norms > 1.0 + SCHEME_TOL):
            out.append(f"direction norms {norms} exceed 1")
        drift = np.abs(w @ d).max()
        if drift > SCHEME_TOL:
            out.append(f"average displacement {drift!r} is not zero")
        if s is not None:
            g = splitting_effect(w, d, s)
            if abs(g - self.predicted_gain) > SCHEME_TOL * max(1.0, np.linalg.norm(s)):
                out.append(f"predicted gain {self.predicted_gain!r} != re-evaluated {g!r}")
        return out

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "m": self.m,
            "c": self.c,
            "predicted_gain": self.predicted_gain,
            "weight_fractions": self.weight_fractions.tolist(),
            "directions": self.directions.tolist(),
        }


def _scheme(variant, weights, directions, gain, c) -> SplitScheme:
    w = np.asarray(weights, dtype=float)
    d = np.asarray(directions, dtype=float)
    # normalise -0.0 so serialized reports are stable
    return SplitScheme(len(w), w, d, float(gain) + 0.0, variant, float(c))


def no_split(dim: int, c: float = 1.0) -> SplitScheme:
    return _scheme("none", [1.0], np.zeros((1, dim)), 0.0, c)


def positive_binary(spec: SpectralSummary, c: float = 1.0) -> SplitScheme:
    v = spec.v_min
    return _scheme("positive-binary", [0.5, 0.5], [v, -v], spec.lambda_min, c)


def negative_binary(spec: SpectralSummary, c: float) -> SplitScheme:
    k = (c - 1.0) / (c + 1.0)
    v = spec.v_max
    return _scheme(
        "negative-binary", [-(c - 1.0) / 2.0, (c + 1.0) / 2.0], [v, k * v], -k * spec.lambda_max, c
    )


def positive_triplet(spec: SpectralSummary, c: float) -> SplitScheme:
    v = spec.v_min
    a = (c + 1.0) / 4.0
    return _scheme(
        "positive-triplet",
        [a, a, -(c - 1.0) / 2.0],
        [v, -v, np.zeros_like(v)],
        (c + 1.0) / 2.0 * spec.lambda_min,
        c,
    )


def negative_triplet(spec: SpectralSummary, c: float) -> SplitScheme:
    v = spec.v_max
    a = -(c - 1.0) / 4.0
    return _scheme(
        "negative-triplet",
        [a, a, (c + 1.0) / 2.0],
        [v, -v, np.zeros_like(v)],
        -(c - 1.0) / 2.0 * spec.lambda_max,
        c,
    )


def quartet(spec: SpectralSummary, c: float) -> SplitScheme:
    lo = min(spec.lambda_min, 0.0)
    hi = max(spec.lambda_max, 0.0)
    v_lo = spec.v_min if spec.lambda_min < 0 else np.zeros(spec.dim)
    v_hi = spec.v_max if spec.lambda_max > 0 else np.zeros(spec.dim)
    a = (c + 1.0) / 4.0
    b = -(c - 1.0) / 4.0
    gain = (c + 1.0) / 2.0 * lo - (c - 1.0) / 2.0 * hi
    return _scheme("quartet", [a, a, b, b], [v_lo, -v_lo, v_hi, -v_hi], gain, c)


def _check_c(c: float):
    if not c >= 1.0:
        raise InvalidInputError(f"c must be >= 1, got {c}")


def _spectrum(s, spectrum: SpectralSummary | None) -> SpectralSummary:
    return spectrum if spectrum is not None else spectral_extremes(s)


def _best(candidates) -> SplitScheme:
    # candidates are listed in tie-break order; strict < keeps the first minimum
    best = candidates[0]
    for cand in candidates[1:]:
        if cand.predicted_gain < best.predicted_gain:
            best = cand
    return best


def gain_positive(s, spectrum: SpectralSummary | None = None) -> tuple[float, SplitScheme]:
    """Best gain over positively weighted splits: min(λmin, 0)."""
    spec = _spectrum(s, spectrum)
    if spec.lambda_min < 0:
        scheme = positive_binary(spec)
    else:
        scheme = no_split(spec.dim)
    return scheme.predicted_gain, scheme


def gain_binary(s, c: float, spectrum: SpectralSummary | None = None) -> tuple[float, SplitScheme]:
    """Best signed split into two copies."""
    _check_c(c)
    spec = _spectrum(s, spectrum)
    scheme = _best([no_split(spec.dim, c), positive_binary(spec, c), negative_binary(spec, c)])
    return scheme.predicted_gain, scheme


def gain_triplet(s, c: float, spectrum: SpectralSummary | None = None) -> tuple[float, SplitScheme]:
    """Best signed split into three copies; the third copy stays in place."""
    _check_c(c)
    spec = _spectrum(s, spectrum)
    scheme = _best([no_split(spec.dim, c), positive_triplet(spec, c), negative_triplet(spec, c)])
    return scheme.predicted_gain, scheme


def gain_quartet(s, c: float, spectrum: SpectralSummary | None = None) -> tuple[float, SplitScheme]:
    """Best signed split for any number of copies, attained with four.

    When only one of λmin < 0, λmax > 0 holds the unused pair of copies gets
    zero directions, so the scheme still has four copies.
    """
    _check_c(c)
    spec = _spectrum(s, spectrum)
    scheme = quartet(spec, c)
    if scheme.predicted_gain == 0.0:
        scheme = no_split(spec.dim, c)
    return scheme.predicted_gain, scheme


GAIN_FUNCTIONS = {2: gain_binary, 3: gain_triplet, 4: gain_quartet}


def splitting_effect(weights, deltas, s) -> float:
    """The quadratic splitting effect Σ wᵢ δᵢᵀ S δᵢ."""
    w = np.asarray(weights, dtype=float).reshape(-1)
    d = np.asarray(deltas, dtype=float)
    s = np.asarray(s, dtype=float)
    if d.ndim != 2 or d.shape[0] != w.shape[0] or s.shape != (d.shape[1], d.shape[1]):
        raise InvalidInputError(
            f"shape mismatch: {w.shape[0]} weights, directions {d.shape}, matrix {s.shape}"
        )
    return float(w @ np.einsum("ij,jk,ik->i", d, s, d))


def splitting_matrix(net: MlpNetwork, data: Dataset, neuron: str) -> np.ndarray:
    """Splitting matrix E[Φ′(f) · ∂f/∂σᵢ · σ″(θᵢᵀz) · z zᵀ] of one neuron."""
    sig = neuron_signals(net, data, neuron)
    _, _, d2 = net.activation.evaluate(sig.h)
    coef = residuals(net, data) * sig.dfdsigma * d2 / data.n
    return as_symmetric((sig.z * coef[:, None]).T @ sig.z)


@dataclass(frozen=True)
class NeuronSplitReport:
    neuron: str
    matrix: np.ndarray
    spectrum: SpectralSummary
    gains: dict  # m -> (G, SplitScheme)
    positive_gain: tuple

    def gain(self, m: int) -> float:
        return self.gains[m][0]

    def to_dict(self) -> dict:
        spec = self.spectrum
        best_m = min(self.gains, key=lambda m: (self.gains[m][0], m))
        return {
            "neuron": self.neuron,
            "lambda_min": spec.lambda_min,
            "lambda_max": spec.lambda_max,
            "rho": spec.rho,
            "G_positive": self.positive_gain[0],
            "G2": self.gains[2][0],
            "G3": self.gains[3][0],
            "G4": self.gains[4][0],
            "recommended": self.gains[best_m][1].to_dict(),
        }


SpectrumBackend = Callable[[np.ndarray], SpectralSummary]


def neuron_report(
    net: MlpNetwork,
    data: Dataset,
    neuron: str,
    c: float,
    backend: SpectrumBackend = spectral_extremes,
) -> NeuronSplitReport:
    s = splitting_matrix(net, data, neuron)
    spec = backend(s)
    return NeuronSplitReport(
        neuron=neuron,
        matrix=s,
        spectrum=spec,
        gains={m: fn(s, c, spectrum=spec) for m, fn in GAIN_FUNCTIONS.items()},
        positive_gain=gain_positive(s, spectrum=spec),
    )


def split_reports(
    net: MlpNetwork, data: Dataset, c: float, backend: SpectrumBackend = spectral_extremes
) -> list[NeuronSplitReport]:
    """Reports for every neuron, in network order."""
    return [neuron_report(net, data, i, c, backend) for i in net.neuron_ids]


def apply_split(net: MlpNetwork, neuron: str, scheme: SplitScheme, epsilon: float) -> MlpNetwork:
    """Replace a neuron by ``scheme.m`` copies at θ + ε·δᵢ.

    Copy i keeps ``weight_fractions[i]`` of the original outgoing weights
    (the readout weight or the whole outgoing column) and gets id
    ``<neuron>.<i+1>``.
    """
    if scheme.variant == "none" or scheme.m < 2:
        raise InvalidInputError("scheme does not split the neuron")
    if epsilon < 0:
        raise InvalidInputError(f"epsilon must be >= 0, got {epsilon}")
    problems = scheme.violations()
    if problems:
        raise InvalidInputError("invalid scheme: " + "; ".join(problems))
    layer, idx = net.locate(neuron)
    w_in = net.layers[layer]
    if scheme.dim != w_in.shape[1]:
        raise InvalidInputError(f"scheme directions have dim {scheme.dim}, neuron fan-in is {w_in.shape[1]}")
    frac = scheme.weight_fractions
    copies = w_in[idx] + epsilon * scheme.directions
    layers = list(net.layers)
    layers[layer] = np.vstack([w_in[:idx], copies, w_in[idx + 1 :]])
    out = net.output_weights
    if layer == net.depth - 1:
        out = np.concatenate([out[:idx], frac * out[idx], out[idx + 1 :]])
    else:
        nxt = net.layers[layer + 1]
        cols = nxt[:, idx : idx + 1] * frac[None, :]
        layers[layer + 1] = np.hstack([nxt[:, :idx], cols, nxt[:, idx + 1 :]])
    ids = list(net.ids)
    row = ids[layer]
    ids[layer] = row[:idx] + tuple(f"{neuron}.{k + 1}" for k in range(scheme.m)) + row[idx + 1 :]
    return with_weights(net, layers=layers, output_weights=out, ids=tuple(ids))


def taylor_residuals(
    net: MlpNetwork, data: Dataset, neuron: str, scheme: SplitScheme, epsilons
) -> tuple[np.ndarray, np.ndarray]:
    """|L(split at ε) − L − (ε²/2)·II| for each ε, with II re-evaluated on S."""
    if scheme.variant == "none":
        raise InvalidInputError("scheme does not split the neuron")
    s = splitting_matrix(net, data, neuron)
    effect = splitting_effect(scheme.weight_fractions, scheme.directions, s)
    base = loss(net, data)
    eps = np.asarray(epsilons, dtype=float)
    # ε = 0 is an exact morphism; report 0 rather than summation-order noise
    res = np.array(
        [
            abs(loss(apply_split(net, neuron, scheme, e), data) - base - 0.5 * e * e * effect) if e > 0 else 0.0
            for e in eps
        ]
    )
    return eps, res


def verify_taylor(
    net: MlpNetwork, data: Dataset, neuron: str, scheme: SplitScheme, epsilons
) -> float:
    """Least-squares slope of log residual against log ε.

    Points with ε = 0 or an exactly zero residual are left out of the fit.
    """
    eps, res = taylor_residuals(net, data, neuron, scheme, epsilons)
    keep = (eps > 0) & (res > 0)
    if keep.sum() < 3 or eps[keep].max() < 10.0 * eps[keep].min():
        raise InvalidInputError("need at least 3 positive epsilons spanning a decade")
    slope, _ = np.polyfit(np.log(eps[keep]), np.log(res[keep]), 1)
    return float(slope)
