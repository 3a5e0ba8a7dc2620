"""Numerical search for the optimal splitting gain.

This module is the independent check on the closed-form schemes. It
minimizes Σ wᵢ δᵢᵀ S δᵢ over Σwᵢ = 1, Σ|wᵢ| ≤ c, Σwᵢδᵢ = 0, ‖δᵢ‖ ≤ 1 by
random-restart projected descent, with no knowledge of the closed-form answer.
Two parameterizations are searched and the smaller value wins:

* eigen-reduced: δᵢ restricted to the line of one eigenvector, which
  turns the problem into scalars per copy (eigenvalues come from LAPACK, not
  from the package's Jacobi solver);
* free: δᵢ anywhere in the unit ball of the original coordinates.
"""

from __future__ import annotations

import numba
import numpy as np

from .errors import InvalidInputError
from .numerics import as_symmetric

DEFAULT_RESTARTS = 64
DEFAULT_ITERS = 500
DEFAULT_STEP = 0.05


@numba.njit(cache=True)
def _l1(w, u, t):
    total = 0.0
    for i in range(w.shape[0]):
        total += abs(u + t * (w[i] - u))
    return total


@numba.njit(cache=True)
def _project_weights(w, c):
    m = w.shape[0]
    shift = (1.0 - w.sum()) / m
    for i in range(m):
        w[i] += shift
    u = 1.0 / m
    if _l1(w, u, 1.0) <= c:
        return
    # shrink toward the uniform point until the l1 budget holds
    lo, hi = 0.0, 1.0
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        if _l1(w, u, mid) <= c:
            lo = mid
        else:
            hi = mid
    for i in range(m):
        w[i] = u + lo * (w[i] - u)


@numba.njit(cache=True)
def _center(d, w):
    m, dim = d.shape
    for k in range(dim):
        mean = 0.0
        for i in range(m):
            mean += w[i] * d[i, k]
        # weights sum to one, so subtracting the weighted mean zeros it
        for i in range(m):
            d[i, k] -= mean


@numba.njit(cache=True)
def _row_norm(d, i):
    total = 0.0
    for k in range(d.shape[1]):
        total += d[i, k] * d[i, k]
    return np.sqrt(total)


@numba.njit(cache=True)
def _ball_shift(y, w, mu, out):
    # out_i = ball projection of y_i - w_i mu
    m, dim = y.shape
    for i in range(m):
        nrm = 0.0
        for k in range(dim):
            out[i, k] = y[i, k] - w[i] * mu[k]
            nrm += out[i, k] * out[i, k]
        nrm = np.sqrt(nrm)
        if nrm > 1.0:
            for k in range(dim):
                out[i, k] /= nrm


@numba.njit(cache=True)
def _project_directions(d, w, y, mu, sweeps):
    """Euclidean projection onto {sum w_i d_i = 0, |d_i| <= 1}, in place.

    Dual ascent on the multiplier of the linear constraint; y and mu are
    scratch buffers. A final center and common rescale makes the result
    exactly feasible.
    """
    m, dim = d.shape
    # mu is warm-started from the previous call
    y[:, :] = d
    lip = 0.0
    for i in range(m):
        lip += w[i] * w[i]
    for _ in range(sweeps):
        _ball_shift(y, w, mu, d)
        resid = 0.0
        for k in range(dim):
            g = 0.0
            for i in range(m):
                g += w[i] * d[i, k]
            mu[k] += g / lip
            resid += g * g
        if resid < 1e-18:
            break
    _ball_shift(y, w, mu, d)
    _center(d, w)
    big = 1.0
    for i in range(m):
        big = max(big, _row_norm(d, i))
    for i in range(m):
        for k in range(dim):
            d[i, k] /= big


@numba.njit(cache=True)
def _effect(w, d, s):
    m, dim = d.shape
    total = 0.0
    for i in range(m):
        q = 0.0
        for a in range(dim):
            for b in range(dim):
                q += d[i, a] * s[a, b] * d[i, b]
        total += w[i] * q
    return total


@numba.njit(cache=True)
def _search(s, c, w_starts, d_starts, iters, step0):
    best = np.inf
    restarts, m, dim = d_starts.shape
    gw = np.empty(m)
    gd = np.empty((m, dim))
    w_new = np.empty(m)
    d_new = np.empty((m, dim))
    y = np.empty((m, dim))
    mu = np.zeros(dim)
    w_best = np.zeros(m)
    d_best = np.zeros((m, dim))
    for r in range(restarts):
        w = w_starts[r].copy()
        d = d_starts[r].copy()
        _project_weights(w, c)
        _project_directions(d, w, y, mu, 200)
        val = _effect(w, d, s)
        step = step0
        for _ in range(iters):
            for i in range(m):
                # per-copy preconditioning: light copies still move their
                # directions at full speed
                pre = w[i] / max(abs(w[i]), 0.05)
                q = 0.0
                for a in range(dim):
                    sd = 0.0
                    for b in range(dim):
                        sd += s[a, b] * d[i, b]
                    gd[i, a] = 2.0 * pre * sd
                    q += d[i, a] * sd
                gw[i] = q
            improved = False
            while step > 1e-9:
                for i in range(m):
                    w_new[i] = w[i] - step * gw[i]
                    for a in range(dim):
                        d_new[i, a] = d[i, a] - step * gd[i, a]
                _project_weights(w_new, c)
                _project_directions(d_new, w_new, y, mu, 30)
                v_new = _effect(w_new, d_new, s)
                if v_new < val:
                    gain = val - v_new
                    w[:] = w_new
                    d[:, :] = d_new
                    val = v_new
                    improved = gain > 1e-8
                    break
                step *= 0.5
            if not improved:
                break
            step = min(step * 1.5, 20.0 * step0)
        if val < best:
            best = val
            w_best[:] = w
            d_best[:, :] = d
    return best, w_best, d_best


def _starts(rng, restarts, m, dim, c):
    # spread starts over the faces of the weight polytope: a random sign
    # pattern, then random splits of the positive and negative budgets
    neg = rng.uniform(size=(restarts, m)) < 0.5
    neg[neg.all(axis=1), 0] = False
    pos_mass = 1.0 + rng.uniform(size=(restarts, 1)) * (c - 1.0) / 2.0
    pos_mass[~neg.any(axis=1)] = 1.0
    share = rng.exponential(size=(restarts, m))
    pos_share = np.where(neg, 0.0, share)
    neg_share = np.where(neg, share, 0.0)
    neg_total = neg_share.sum(axis=1, keepdims=True)
    w = pos_mass * pos_share / pos_share.sum(axis=1, keepdims=True)
    w -= (pos_mass - 1.0) * neg_share / np.where(neg_total > 0, neg_total, 1.0)
    d = rng.standard_normal((restarts, m, dim))
    d /= np.linalg.norm(d, axis=2, keepdims=True)
    d *= rng.uniform(size=(restarts, m, 1)) ** (1.0 / dim)
    return w, d


def brute_force_parts(
    s,
    m: int,
    c: float,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    iters: int = DEFAULT_ITERS,
    step: float = DEFAULT_STEP,
) -> tuple[float, float]:
    """Return ``(eigen_reduced, free)`` best values found by the two searches."""
    if restarts < 1:
        raise InvalidInputError(f"restarts must be >= 1, got {restarts}")
    a = as_symmetric(s)
    scale = float(np.linalg.norm(a))
    if scale == 0.0:
        return 0.0, 0.0
    a = a / scale
    dim = a.shape[0]
    rng = np.random.default_rng(seed)
    evals = np.linalg.eigvalsh(a)
    reduced = np.inf
    for lam in evals:
        sub = np.array([[lam]])
        w0, d0 = _starts(rng, restarts, m, 1, c)
        reduced = min(reduced, _search(sub, float(c), w0, d0, iters, step)[0])
    w0, d0 = _starts(rng, restarts, m, dim, c)
    free = _search(a, float(c), w0, d0, iters, step)[0]
    return reduced * scale, free * scale


def brute_force_gain(
    s,
    m: int,
    c: float,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    iters: int = DEFAULT_ITERS,
    step: float = DEFAULT_STEP,
) -> float:
    """Smallest splitting effect found over m signed copies."""
    return min(brute_force_parts(s, m, c, restarts, seed, iters, step))
