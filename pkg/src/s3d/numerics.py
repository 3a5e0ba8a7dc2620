"""Symmetric eigen solvers for small dense matrices.

Two routes are provided: an exact cyclic Jacobi solver and a Rayleigh-quotient
gradient iteration that only needs matrix-vector products.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


@dataclass(frozen=True)
class SpectralSummary:
    """Extreme eigenpairs of a symmetric matrix."""

    lambda_min: float
    lambda_max: float
    v_min: np.ndarray
    v_max: np.ndarray

    @property
    def rho(self) -> float:
        return max(abs(self.lambda_min), abs(self.lambda_max))

    @property
    def dim(self) -> int:
        return self.v_min.shape[0]


def as_symmetric(a) -> np.ndarray:
    """Validate a square finite matrix and return its symmetric part."""
    s = np.array(a, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] == 0:
        raise InvalidInputError(f"expected a non-empty square matrix, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise InvalidInputError("matrix has non-finite entries")
    return 0.5 * (s + s.T)


def fix_sign(v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Flip ``v`` so that its first non-negligible component is positive."""
    for x in v:
        if abs(x) > tol:
            return v if x > 0 else -v
    return v


def sym_eig(s) -> tuple[np.ndarray, np.ndarray]:
    """Full eigendecomposition by cyclic Jacobi rotations.

    Returns eigenvalues in ascending order and a matrix whose columns are the
    corresponding orthonormal eigenvectors.
    """
    a = as_symmetric(s)
    d = a.shape[0]
    v = np.eye(d)
    fro = np.linalg.norm(a)
    if fro == 0.0:
        return np.zeros(d), v
    threshold = JACOBI_TOL * fro
    negligible = 1e-3 * threshold / d
    for _ in range(JACOBI_MAX_SWEEPS):
        off = np.sqrt(max(fro**2 - np.sum(np.diag(a) ** 2), 0.0))
        # the cheap estimate above loses accuracy near convergence
        if off < 1e3 * threshold:
            off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= threshold:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if abs(apq) <= negligible:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.copysign(1.0, theta) / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.hypot(t, 1.0)
                sn = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - sn * aq
                a[:, q] = sn * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - sn * rq
                a[q, :] = sn * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                v[:, p] = c * vp - sn * v[:, q]
                v[:, q] = sn * vp + c * v[:, q]
    evals = np.diag(a).copy()
    order = np.argsort(evals, kind="stable")
    evals = evals[order]
    vecs = v[:, order]
    for k in range(d):
        vecs[:, k] = fix_sign(vecs[:, k])
    return evals, vecs


def spectral_extremes(s) -> SpectralSummary:
    evals, vecs = sym_eig(s)
    return SpectralSummary(
        lambda_min=float(evals[0]),
        lambda_max=float(evals[-1]),
        v_min=vecs[:, 0].copy(),
        v_max=vecs[:, -1].copy(),
    )


def _rayleigh_descent(s: np.ndarray, v: np.ndarray, max_iters: int, step: float):
    """Minimize vᵀSv over the unit sphere by normalized gradient steps."""
    v = v / np.linalg.norm(v)
    sv = s @ v
    r = float(v @ sv)
    scale = max(1.0, float(np.linalg.norm(s)))
    for _ in range(max_iters):
        g = 2.0 * (sv - r * v)
        if np.linalg.norm(g) <= 1e-13 * scale:
            break
        eta = step
        while eta > 1e-14:
            cand = v - eta * g
            cand /= np.linalg.norm(cand)
            s_cand = s @ cand
            r_cand = float(cand @ s_cand)
            if r_cand < r:
                v, sv, r = cand, s_cand, r_cand
                break
            eta *= 0.5
        else:
            break
    return r, v


def rayleigh_extremes(
    s, max_iters: int = 1000, step: float = 0.1, restarts: int = 3, seed: int = 0
) -> SpectralSummary:
    """Approximate extreme eigenpairs by Rayleigh-quotient descent and ascent.

    Each restart starts from a uniformly random point on the unit sphere; the
    best value over restarts is kept for each end of the spectrum.
    """
    if max_iters < 1 or restarts < 1:
        raise InvalidInputError("max_iters and restarts must be >= 1")
    a = as_symmetric(s)
    d = a.shape[0]
    rng = np.random.default_rng(seed)
    best_min = (np.inf, None)
    best_max = (-np.inf, None)
    for _ in range(restarts):
        v0 = rng.standard_normal(d)
        while np.linalg.norm(v0) == 0.0:
            v0 = rng.standard_normal(d)
        r, v = _rayleigh_descent(a, v0, max_iters, step)
        if r < best_min[0]:
            best_min = (r, v)
        r, v = _rayleigh_descent(-a, v0, max_iters, step)
        if -r > best_max[0]:
            best_max = (-r, v)
    return SpectralSummary(
        lambda_min=best_min[0],
        lambda_max=best_max[0],
        v_min=fix_sign(best_min[1]),
        v_max=fix_sign(best_max[1]),
    )
