"""Lanczos ground-state solver shared by the DMRG engine and the dense oracle."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import NormalizationError

BETA_TOL = 1e-13


@dataclass
class LanczosResult:
    energy: float
    vector: np.ndarray
    alphas: list[float]
    betas: list[float]
    iterations: int
    basis: list[np.ndarray] = field(default_factory=list, repr=False)


def lanczos(
    matvec: Callable[[np.ndarray], np.ndarray],
    v0: np.ndarray,
    iters: int,
    *,
    reorthogonalize: bool = True,
    keep_basis: bool = False,
) -> LanczosResult:
    """Lowest Ritz pair from ``iters`` Lanczos steps starting at ``v0``.

    Uses the three-term recurrence with full reorthogonalization; ``beta``
    is the residual norm before normalization and the recursion stops early
    once it falls below 1e-13 (an invariant subspace has been found).
    """
    if iters < 1:
        raise ValueError(f"iters must be at least 1, got {iters}")
    v0 = np.asarray(v0)
    nrm = np.linalg.norm(v0)
    if nrm == 0 or not np.isfinite(nrm):
        raise NormalizationError("Lanczos start vector is zero")
    basis = [v0 / nrm]
    alphas: list[float] = []
    betas: list[float] = []
    for n in range(iters):
        w = matvec(basis[n])
        alphas.append(float(np.vdot(basis[n], w).real))
        if n == iters - 1:
            break
        w = w - alphas[n] * basis[n]
        if n > 0:
            w = w - betas[n - 1] * basis[n - 1]
        if reorthogonalize:
            for _ in range(2):
                for q in basis:
                    w = w - np.vdot(q, w) * q
        beta = float(np.linalg.norm(w))
        if beta < BETA_TOL:
            break
        betas.append(beta)
        basis.append(w / beta)
    k = len(alphas)
    if k == 1:
        coeffs = np.ones(1)
        energy = alphas[0]
    else:
        vals, vecs = scipy.linalg.eigh_tridiagonal(np.array(alphas), np.array(betas[: k - 1]))
        energy = float(vals[0])
        coeffs = vecs[:, 0]
    vec = sum(c * q for c, q in zip(coeffs, basis[:k]))
    vec = vec / np.linalg.norm(vec)
    return LanczosResult(energy, vec, alphas, betas[: k - 1], k, basis[:k] if keep_basis else [])
