"""Numerical checks of the convergence analysis for one-hidden-layer networks.

The constants follow a Frobenius-norm argument: with X the d²×n matrix whose
columns are vec(xxᵀ), λ_X = λmin(XᵀX/d²) and h a floor on |σ″| over all
neurons and samples, every neuron's splitting matrix satisfies

    E[(f − y)²] ≤ α · (ρ(Sᵢ)/wᵢ)²,    α = n / (d·h²·λ_X),

so a small spectrum radius everywhere forces a small training error.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, PreconditionViolated
from .model import Activation, Dataset, MlpNetwork, get_activation, predict, sigmoid
from .numerics import spectral_extremes
from .splitting import splitting_matrix

DEFAULT_C = 10.0
BOUND_SLACK = 1e-9
RANK_TOL = 1e-12


def kappa(m: int, c: float) -> float:
    """Descent constant of the optimal m-copy scheme."""
    if m == 2:
        return (c - 1.0) / (c + 1.0)
    if m in (3, 4):
        return (c - 1.0) / 2.0
    raise InvalidInputError(f"m must be 2, 3 or 4, got {m}")


def data_spectrum(data: Dataset) -> float:
    """λmin(XᵀX/d²) for the vectorized input outer products.

    The outer products live in the d(d+1)/2-dimensional space of symmetric
    matrices, so more samples than that force the value to exactly 0.
    """
    x = data.inputs
    n, d = x.shape
    if n > d * (d + 1) // 2:
        return 0.0
    # (XᵀX)_{lk} = <vec(x_l x_lᵀ), vec(x_k x_kᵀ)> = (x_l · x_k)²
    gram = (x @ x.T) ** 2 / d**2
    lam = float(np.linalg.eigvalsh(gram)[0])
    if lam <= RANK_TOL * max(1.0, float(np.max(np.diag(gram)))):
        return 0.0
    return lam


def curvature_floor(net: MlpNetwork, data: Dataset) -> float:
    """min |σ″(θᵢᵀz)| over every hidden neuron and sample."""
    floor = math.inf
    a = data.inputs
    for w in net.layers:
        h = a @ w.T
        a, _, d2 = net.activation.evaluate(h)
        floor = min(floor, float(np.min(np.abs(d2))))
    return floor


@dataclass(frozen=True)
class TheoryContext:
    """Constants entering the bounds, derived from a dataset and a network."""

    n: int
    d: int
    lambda_X: float
    h: float
    eta: float
    c: float
    C: float = DEFAULT_C
    kappa: dict = field(init=False)
    alpha: float = field(init=False)
    rho0: float = field(init=False)

    def __post_init__(self):
        if not self.eta > 0:
            raise InvalidInputError(f"eta must be positive, got {self.eta}")
        if not self.c >= 1:
            raise InvalidInputError(f"c must be >= 1, got {self.c}")
        if not self.C > 0:
            raise InvalidInputError(f"C must be positive, got {self.C}")
        if self.lambda_X < 0 or self.h < 0:
            raise InvalidInputError("lambda_X and h must be non-negative")
        denom = self.d * self.h**2 * self.lambda_X
        object.__setattr__(self, "kappa", {m: kappa(m, self.c) for m in (2, 3, 4)})
        object.__setattr__(self, "alpha", self.n / denom if denom > 0 else math.inf)
        object.__setattr__(self, "rho0", self.h * math.sqrt(self.lambda_X * self.eta * self.d / self.n))

    @classmethod
    def build(cls, net: MlpNetwork, data: Dataset, eta: float, c: float, C: float = DEFAULT_C):
        return cls(
            n=data.n,
            d=data.d,
            lambda_X=data_spectrum(data),
            h=curvature_floor(net, data),
            eta=eta,
            c=c,
            C=C,
        )

    def epsilon_max(self, m: int) -> float:
        """Largest step size covered by the iteration bound."""
        return self.kappa[m] * self.rho0 / (4.0 * self.C)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "lambda_X": self.lambda_X,
            "h": self.h,
            "alpha": self.alpha,
            "C": self.C,
            "eta": self.eta,
            "c": self.c,
            "kappa": {str(m): k for m, k in self.kappa.items()},
            "rho0": self.rho0,
            "epsilon_max": {str(m): self.epsilon_max(m) for m in (2, 3, 4)},
        }


@dataclass(frozen=True)
class BoundCheck:
    neuron: str
    rho: float
    w: float
    bound: float
    actual: float
    holds: bool
    skipped_reason: str | None = None

    def to_dict(self) -> dict:
        return {
            "neuron": self.neuron,
            "rho": self.rho,
            "w": self.w,
            "bound": self.bound,
            "actual": self.actual,
            "holds": self.holds,
            "skipped_reason": self.skipped_reason,
        }


def _skip_reason(net: MlpNetwork, ctx: TheoryContext, kind: str) -> str | None:
    if net.loss_kind != kind:
        return f"precondition-violated: loss is {net.loss_kind}, bound needs {kind}"
    if net.depth != 1:
        return "precondition-violated: bound checked for one hidden layer only"
    if ctx.lambda_X == 0:
        return "precondition-violated: lambda_X = 0"
    if ctx.h == 0:
        return "precondition-violated: curvature floor h = 0"
    return None


def _per_neuron(net, data, ctx, kind, actual, bound_fn, holds_fn) -> list[BoundCheck]:
    reason = _skip_reason(net, ctx, kind)
    out = []
    for idx, neuron in enumerate(net.neuron_ids):
        w = float(net.output_weights[idx]) if net.depth == 1 else math.nan
        if reason is not None or w == 0.0:
            why = reason or "precondition-violated: output weight is 0"
            out.append(BoundCheck(neuron, math.nan, w, math.nan, actual, False, why))
            continue
        rho = spectral_extremes(splitting_matrix(net, data, neuron)).rho
        bound = bound_fn(rho, w)
        out.append(BoundCheck(neuron, rho, w, bound, actual, bool(holds_fn(actual, bound))))
    return out


def check_mse_bound(net: MlpNetwork, data: Dataset, ctx: TheoryContext) -> list[BoundCheck]:
    """Check E[(f − y)²] ≤ α·(ρ(Sᵢ)/wᵢ)² for every neuron.

    Neurons are skipped (``holds`` false, ``skipped_reason`` set) when the
    assumptions fail; a skipped check is not a counterexample.
    """
    actual = float(np.mean((predict(net, data.inputs) - data.targets) ** 2))
    return _per_neuron(
        net,
        data,
        ctx,
        "mse",
        actual,
        lambda rho, w: ctx.alpha * (rho / w) ** 2,
        lambda a, b: b - a >= -BOUND_SLACK,
    )


def check_likelihood_bound(net: MlpNetwork, data: Dataset, ctx: TheoryContext) -> list[BoundCheck]:
    """Check likelihood ≥ 1 − √α·ρ(Sᵢ)/|wᵢ| for a cross-entropy network.

    With eₗ = p(fₗ) − yₗ the likelihood is 1 − mean|eₗ| ≥ 1 − (mean eₗ²)^{1/2},
    and the MSE argument applies to the residuals eₗ unchanged.
    """
    if not data.is_binary:
        raise InvalidInputError("likelihood bound needs targets in {0, 1}")
    p = sigmoid(predict(net, data.inputs))
    y = data.targets
    actual = float(np.mean(p * y + (1.0 - p) * (1.0 - y)))
    return _per_neuron(
        net,
        data,
        ctx,
        "bce",
        actual,
        lambda rho, w: 1.0 - math.sqrt(ctx.alpha) * rho / abs(w),
        lambda a, b: a - b >= -BOUND_SLACK,
    )


def iteration_bound(L0: float, ctx: TheoryContext, epsilon: float, m: int) -> int:
    """Number of splitting steps after which the loss is guaranteed below η.

    For m ∈ {3, 4}: T = ⌈β ε⁻² (n/(dη))^{1/2}⌉ with β = 4(κ₃ h √λ_X)⁻¹ (L0 − η)₊.
    For m = 2: T = ⌈β n^{1/2} d^{−1/2} ε⁻² η^{−1/2}⌉ with β = 4(κ₂ h² λ_X²)⁻¹ (L0 − η)₊.
    """
    if m not in (2, 3, 4):
        raise InvalidInputError(f"m must be 2, 3 or 4, got {m}")
    if not epsilon > 0:
        raise InvalidInputError(f"epsilon must be positive, got {epsilon}")
    excess = max(L0 - ctx.eta, 0.0)
    if excess == 0.0:
        return 0
    k = ctx.kappa[m]
    if k == 0 or ctx.h == 0 or ctx.lambda_X == 0:
        raise PreconditionViolated("no finite bound: kappa, h or lambda_X is zero")
    if epsilon > ctx.epsilon_max(m):
        warnings.warn(
            f"epsilon {epsilon} exceeds epsilon_max {ctx.epsilon_max(m)}; the bound assumes smaller steps",
            stacklevel=2,
        )
    if m == 2:
        beta = 4.0 * excess / (k * ctx.h**2 * ctx.lambda_X**2)
    else:
        beta = 4.0 * excess / (k * ctx.h * math.sqrt(ctx.lambda_X))
    return int(math.ceil(beta / epsilon**2 * math.sqrt(ctx.n / (ctx.d * ctx.eta))))


def data_radius(data: Dataset) -> float:
    """max over samples of max(‖x‖, |y|)."""
    return float(max(np.max(np.linalg.norm(data.inputs, axis=1)), np.max(np.abs(data.targets))))


def initial_width_bound(
    data: Dataset,
    sigma_lip: float | None,
    r: float,
    ctx: TheoryContext,
    epsilon: float,
    activation: Activation | str = "tanh",
) -> int:
    """Width m0 = ⌈(4ε²κ₂(η/α)^{1/2})⁻¹ (ℓ0 − η)⌉ with ℓ0 = r_D(1 + r‖σ‖_Lip).

    Requires σ(0) = 0; the result is clamped to at least one neuron.
    """
    act = get_activation(activation) if isinstance(activation, str) else activation
    if float(act(0.0)) != 0.0:
        raise PreconditionViolated(f"activation {act.name} has sigma(0) != 0")
    if not epsilon > 0:
        raise InvalidInputError(f"epsilon must be positive, got {epsilon}")
    lip = act.lipschitz if sigma_lip is None else sigma_lip
    ell0 = data_radius(data) * (1.0 + r * lip)
    if ell0 <= ctx.eta:
        return 1
    denom = 4.0 * epsilon**2 * ctx.kappa[2] * math.sqrt(ctx.eta / ctx.alpha)
    if denom == 0:
        raise PreconditionViolated("no finite width: kappa_2, h or lambda_X is zero")
    return max(1, int(math.ceil((ell0 - ctx.eta) / denom)))


# -- admissible instances ----------------------------------------------------


def _admissible_inputs(rng: np.random.Generator, d: int, n: int, min_singular: float = 0.1):
    while True:
        x = rng.uniform(-1.5, 1.5, size=(n, d))
        gram = (x @ x.T) ** 2
        if math.sqrt(max(float(np.linalg.eigvalsh(gram)[0]), 0.0)) >= min_singular:
            return x


def _admissible_weights(rng: np.random.Generator, x: np.ndarray, width: int, min_curvature: float = 0.05):
    # rbf's σ″ vanishes at ±1 and decays in the tails; stay clear of both
    while True:
        w = rng.normal(0.0, 0.8, size=(width, x.shape[1]))
        h = np.abs(x @ w.T)
        if np.any((h >= 0.9) & (h <= 1.1)):
            continue
        if np.min(np.abs((h * h - 1.0) * np.exp(-0.5 * h * h))) >= min_curvature:
            return w


def admissible_instance(rng: np.random.Generator, kind: str = "mse") -> tuple[MlpNetwork, Dataset]:
    """Random one-hidden-layer rbf instance satisfying the bound assumptions.

    d ∈ {2, 3, 4}, 1 ≤ n ≤ d(d+1)/2 (the rank limit of the outer products),
    input outer products with smallest singular value ≥ 0.1, every
    pre-activation outside [0.9, 1.1] and curvature floor h ≥ 0.05.
    """
    if kind not in ("mse", "bce"):
        raise InvalidInputError(f"kind must be 'mse' or 'bce', got {kind!r}")
    d = int(rng.integers(2, 5))
    n = int(rng.integers(1, d * (d + 1) // 2 + 1))
    width = int(rng.integers(1, 4))
    x = _admissible_inputs(rng, d, n)
    theta = _admissible_weights(rng, x, width)
    out = rng.choice([-1.0, 1.0], size=width) * rng.uniform(0.3, 2.0, size=width)
    if kind == "mse":
        y = rng.normal(0.0, 1.0, size=n)
    else:
        y = rng.integers(0, 2, size=n).astype(float)
    net = MlpNetwork(activation="rbf", loss_kind=kind, layers=(theta,), output_weights=out)
    return net, Dataset(x, y)
