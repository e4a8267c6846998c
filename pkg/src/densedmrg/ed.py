"""Exact-diagonalization bridge for small systems.

Dense basis states are ordered with site 0 varying fastest, which is the
same leftmost-fastest linearization the tensors use; the matching Kronecker
product is ``kron(O_{N-1}, ..., O_1, O_0)``.
"""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np

from .decompositions import NO_TRUNCATION, TruncationSpec, qr, svd
from .errors import NormalizationError, ResourceError, ShapeError
from .lanczos import lanczos
from .network import MPO, MPS, move_oc
from .tensor import DenseTensor, contract, unreshape

__all__ = ["DEFAULT_GUARD", "full_h", "full_psi", "convert2mps", "krylov_ground", "kron_op"]

DEFAULT_GUARD = 2**14


def _check_guard(dims: Sequence[int], guard: int) -> int:
    total = math.prod(dims)
    if total > guard:
        raise ResourceError(f"dense dimension {total} exceeds the guard {guard}")
    return total


def full_h(mpo: MPO, guard: int = DEFAULT_GUARD) -> np.ndarray:
    """Dense matrix of ``mpo`` (lower-left accumulation corner)."""
    _check_guard(mpo.physical_dims, guard)
    first = mpo[0].to_array()
    h = first[-1]  # (d', d, c): bottom row of the first block
    for i in range(1, mpo.N):
        w = mpo[i].to_array()
        dim = h.shape[0]
        d = w.shape[1]
        h = np.einsum("xyb,bpqc->pxqyc", h, w, optimize=True)
        h = h.reshape(d * dim, d * dim, w.shape[3])
    return np.ascontiguousarray(h[:, :, 0])


def full_psi(psi: MPS, guard: int = DEFAULT_GUARD) -> np.ndarray:
    """Dense wavefunction with site 0 as the fastest-varying index."""
    _check_guard(psi.physical_dims, guard)
    v = psi[0].to_array()[0]  # (d, r)
    for i in range(1, psi.N):
        a = psi[i].to_array()
        dim = v.shape[0]
        v = np.einsum("xr,rsc->sxc", v, a).reshape(a.shape[1] * dim, a.shape[2])
    return np.ascontiguousarray(v[:, 0])


def kron_op(ops_by_site: dict[int, np.ndarray], d: int, N: int) -> np.ndarray:
    """Dense ``prod_i O_i`` (identity where unspecified) in the site-0-fastest basis."""
    out = np.ones((1, 1))
    for i in range(N - 1, -1, -1):
        out = np.kron(out, ops_by_site.get(i, np.eye(d)))
    return out


def convert2mps(
    vec,
    d: int,
    N: int,
    spec: TruncationSpec = NO_TRUNCATION,
    return_truncerr: bool = False,
):
    """Split a dense vector into an MPS (orthogonality center at site 0, not renormalized).

    Without truncation the split uses QR; with an active ``spec`` each step
    is a truncated SVD and the summed truncation error can be returned.
    """
    vec = np.asarray(vec)
    if vec.shape != (d**N,):
        raise ShapeError(f"vector of length {vec.size} does not match d**N = {d**N}")
    rest = DenseTensor((1, d) + (d**(N - 1),), vec) if N > 1 else DenseTensor((1, d, 1), vec)
    tensors = []
    total_err = 0.0
    for i in range(N - 1):
        remaining = d ** (N - i - 2)
        if spec.active:
            u, dd, vdag, err, _ = svd(rest, [[0, 1], [2]], spec)
            total_err += err
            left, right = u, contract(dd, [1], vdag, [0])
        else:
            left, right, _, _ = qr(rest, [[0, 1], [2]])
        tensors.append(left)
        k = left.dims[2]
        rest = unreshape(right, (k, d, remaining))
    tensors.append(rest)
    psi = move_oc(MPS(tensors, N - 1), 0)
    return (psi, total_err) if return_truncerr else psi


def krylov_ground(h, v0, maxiter: int = 200, restart: int = 30, tol: float = 1e-14):
    """Restarted Lanczos on a dense (or any ``@``-capable) Hermitian operator.

    Returns ``(vector, energy)``.  At most ``maxiter`` matrix-vector products
    are spent, in cycles of ``restart``.
    """
    v = np.asarray(v0)
    if np.linalg.norm(v) == 0:
        raise NormalizationError("Krylov start vector is zero")
    remaining = maxiter
    energy = math.inf
    while remaining > 0:
        iters = min(restart, remaining)
        res = lanczos(lambda x: h @ x, v, iters)
        remaining -= res.iterations
        converged = res.iterations < iters or abs(energy - res.energy) <= tol * max(1.0, abs(res.energy))
        energy, v = res.energy, res.vector
        if converged:
            break
    return v, energy
