"""Truncating matrix factorizations of grouped tensors.

Every routine here first groups the tensor into a matrix (two index groups),
factorizes that matrix, and then restores the original index shapes on the
outer indices of the factors, with one new link index between them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import DecompositionError, GroupingError, ShapeError
from .tensor import DenseTensor, _flatten, reshape_group

__all__ = [
    "TruncationSpec",
    "SVDResult",
    "EigenResult",
    "QRResult",
    "truncation_rank",
    "svd",
    "eigen",
    "qr",
    "lq",
    "polar",
]

ZERO_RELATIVE = 1e-14
DEGENERACY_RELATIVE = 1e-12
HERMITIAN_RELATIVE = 1e-10


@dataclass(frozen=True)
class TruncationSpec:
    """Bond-dimension limit ``m`` (0 = unlimited), cutoff ``eta`` and optional ``mag``."""

    m: int = 0
    cutoff: float = 0.0
    mag: float | None = None

    def __post_init__(self):
        if self.m < 0:
            raise ValueError(f"m must be non-negative, got {self.m}")
        if self.cutoff < 0:
            raise ValueError(f"cutoff must be non-negative, got {self.cutoff}")
        if self.mag is not None and self.mag < 0:
            raise ValueError(f"mag must be non-negative, got {self.mag}")

    @property
    def active(self) -> bool:
        return self.m > 0 or self.cutoff > 0


NO_TRUNCATION = TruncationSpec()


class SVDResult(NamedTuple):
    U: DenseTensor
    D: DenseTensor
    Vdag: DenseTensor
    truncerr: float
    mag: float

    @property
    def singular_values(self) -> np.ndarray:
        return np.diag(self.D.to_array()).real.copy()


class EigenResult(NamedTuple):
    D: DenseTensor
    U: DenseTensor
    truncerr: float
    mag: float

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.diag(self.D.to_array()).copy()


class QRResult(NamedTuple):
    left: DenseTensor
    right: DenseTensor
    truncerr: float
    mag: float


def _groups(t: DenseTensor, groups) -> tuple[list[int], list[int]]:
    if groups is None:
        if t.rank != 2:
            raise GroupingError(f"groups are required for a rank-{t.rank} tensor")
        return [0], [1]
    if len(groups) != 2:
        raise GroupingError(f"expected two index groups, got {len(groups)}")
    left, right = _flatten(groups[0]), _flatten(groups[1])
    if not left or not right:
        raise GroupingError("index groups must be non-empty")
    return left, right


def _as_matrix(t: DenseTensor, groups):
    left, right = _groups(t, groups)
    mat = reshape_group(t, [left, right])
    ldims = tuple(t.dims[i] for i in left)
    rdims = tuple(t.dims[i] for i in right)
    return mat.to_array(), ldims, rdims


def _wrap(mat: np.ndarray, dims) -> DenseTensor:
    return DenseTensor(dims, np.asarray(mat).ravel(order="F"))


def truncation_rank(weights: np.ndarray, spec: TruncationSpec, mag: float) -> int:
    """Number of leading (descending) ``weights`` to keep under ``spec``.

    ``weights`` are squared singular values (or eigenvalues) sorted in
    descending order.  The count honours the cutoff ``sum(discarded) <=
    cutoff * mag``, then the bond limit ``m``; degenerate groups straddling
    the boundary are kept whole, or dropped whole when ``m`` forbids keeping
    them.  At least one weight is always kept.
    """
    n = len(weights)
    if n == 0:
        return 0
    if not spec.active:
        return n
    w = np.asarray(weights, dtype=float)
    top = w[0]
    k = n
    if top > 0:
        # numerical rank deficiency: tiny singular values are noise
        k = int(np.count_nonzero(w > (ZERO_RELATIVE**2) * top))
    if spec.cutoff > 0:
        budget = spec.cutoff * mag
        tails = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]])
        # smallest j with sum(w[j:]) <= budget
        j = int(np.argmax(tails <= budget))
        k = min(k, j)
    k = max(k, 1)

    def same(a, b):
        return abs(w[a] - w[b]) <= DEGENERACY_RELATIVE * max(abs(w[a]), abs(w[b]), 1e-300)

    while k < n and same(k - 1, k):
        k += 1
    if spec.m > 0 and k > spec.m:
        k = spec.m
        if k < n and same(k - 1, k):
            start = k - 1
            while start > 0 and same(start - 1, start):
                start -= 1
            if start > 0:
                k = start
    return max(k, 1)


def _svd_superpose(m: np.ndarray):
    """SVD through the Hermitian eigenproblem of ``[[0, M], [M^H, 0]]``."""
    a, b = m.shape
    k = min(a, b)
    big = np.zeros((a + b, a + b), dtype=m.dtype)
    big[:a, a:] = m
    big[a:, :a] = m.conj().T
    vals, vecs = scipy.linalg.eigh(big)
    order = np.argsort(vals)[::-1][:k]
    s = np.clip(vals[order], 0.0, None)
    u = vecs[:a, order] * math.sqrt(2.0)
    v = vecs[a:, order] * math.sqrt(2.0)
    return u, s, v.conj().T


def _svd_gram(m: np.ndarray):
    """SVD through the eigenproblem of the smaller Gram matrix."""
    a, b = m.shape
    if a <= b:
        vals, u = scipy.linalg.eigh(m @ m.conj().T)
        order = np.argsort(vals)[::-1]
        u = u[:, order]
        vh = u.conj().T @ m
        s = np.linalg.norm(vh, axis=1)
        vh = vh / np.where(s > 0, s, 1.0)[:, None]
    else:
        vals, v = scipy.linalg.eigh(m.conj().T @ m)
        order = np.argsort(vals)[::-1]
        v = v[:, order]
        u = m @ v
        s = np.linalg.norm(u, axis=0)
        u = u / np.where(s > 0, s, 1.0)[None, :]
        vh = v.conj().T
    return u, s, vh


def _matrix_svd(m: np.ndarray):
    if not np.all(np.isfinite(m)):
        raise DecompositionError("matrix contains non-finite entries")
    for routine in (
        lambda x: np.linalg.svd(x, full_matrices=False),
        _svd_superpose,
        _svd_gram,
    ):
        try:
            u, s, vh = routine(m)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, ValueError):
            continue
        if np.all(np.isfinite(s)):
            return u, s, vh
    raise DecompositionError(f"SVD failed for a {m.shape[0]}x{m.shape[1]} matrix")


def svd(t: DenseTensor, groups=None, spec: TruncationSpec = NO_TRUNCATION) -> SVDResult:
    """Truncated singular value decomposition ``t = U · D · Vdag``.

    ``U`` carries the first group's indices followed by the new link, ``Vdag``
    the link followed by the second group's indices, and ``D`` is a square
    diagonal matrix of descending singular values.
    """
    mat, ldims, rdims = _as_matrix(t, groups)
    u, s, vh = _matrix_svd(mat)
    rho = s**2
    mag = float(rho.sum()) if spec.mag is None else float(spec.mag)
    k = truncation_rank(rho, spec, mag)
    discarded = float(rho[k:].sum())
    truncerr = discarded / mag if mag > 0 else 0.0
    U = _wrap(u[:, :k], ldims + (k,))
    D = _wrap(np.diag(s[:k]), (k, k))
    Vdag = _wrap(vh[:k, :], (k,) + rdims)
    return SVDResult(U, D, Vdag, truncerr, mag)


def eigen(
    t: DenseTensor,
    groups=None,
    spec: TruncationSpec = NO_TRUNCATION,
    overlap: DenseTensor | None = None,
) -> EigenResult:
    """Eigen-decomposition ``t = U · D · U^-1`` (``U^H`` on the Hermitian path).

    Hermitian inputs (asymmetry at most 1e-10 relative) use a symmetric
    solver and are sorted by descending eigenvalue; other inputs use a
    general solver sorted by descending modulus.  With ``overlap`` the
    generalized problem ``H u = lambda S u`` is solved.  Truncation sums raw
    eigenvalues (moduli on the general path).
    """
    mat, ldims, rdims = _as_matrix(t, groups)
    if mat.shape[0] != mat.shape[1]:
        raise ShapeError(f"eigen needs a square matrix-equivalent, got {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise DecompositionError("matrix contains non-finite entries")
    s_mat = None
    if overlap is not None:
        s_mat = overlap.to_array() if overlap.rank == 2 else reshape_group(
            overlap, [list(range(overlap.rank // 2)), list(range(overlap.rank // 2, overlap.rank))]
        ).to_array()
        if s_mat.shape != mat.shape:
            raise ShapeError(f"overlap shape {s_mat.shape} does not match {mat.shape}")
    scale = max(np.linalg.norm(mat), 1e-300)
    hermitian = np.max(np.abs(mat - mat.conj().T), initial=0.0) <= HERMITIAN_RELATIVE * scale
    if s_mat is not None:
        hermitian = hermitian and np.allclose(s_mat, s_mat.conj().T, atol=HERMITIAN_RELATIVE)
    try:
        if hermitian:
            herm = 0.5 * (mat + mat.conj().T)
            vals, vecs = scipy.linalg.eigh(herm, s_mat)
            order = np.argsort(vals)[::-1]
            weights = vals[order]
        else:
            vals, vecs = scipy.linalg.eig(mat, s_mat)
            order = np.argsort(-np.abs(vals), kind="stable")
            weights = np.abs(vals[order])
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, ValueError) as exc:
        raise DecompositionError(f"eigen-decomposition failed: {exc}") from exc
    vals = vals[order]
    vecs = vecs[:, order]
    mag = float(weights.sum()) if spec.mag is None else float(spec.mag)
    k = truncation_rank(weights, spec, mag)
    truncerr = float(weights[k:].sum()) / mag if mag != 0 else 0.0
    D = _wrap(np.diag(vals[:k]), (k, k))
    U = _wrap(vecs[:, :k], ldims + (k,))
    return EigenResult(D, U, truncerr, mag)


def _qr_positive(m: np.ndarray):
    try:
        q, r = np.linalg.qr(m, mode="reduced")
    except np.linalg.LinAlgError as exc:
        raise DecompositionError(f"QR failed: {exc}") from exc
    d = np.diag(r)
    phase = np.where(np.abs(d) > 0, d / np.where(np.abs(d) > 0, np.abs(d), 1.0), 1.0)
    q = q * phase[None, :]
    r = phase.conj()[:, None] * r
    return q, r


def qr(t: DenseTensor, groups=None) -> QRResult:
    """``t = Q · R`` with ``Q`` column-isometric and inner dimension ``min(a, b)``."""
    mat, ldims, rdims = _as_matrix(t, groups)
    q, r = _qr_positive(mat)
    k = q.shape[1]
    return QRResult(_wrap(q, ldims + (k,)), _wrap(r, (k,) + rdims), 0.0, 1.0)


def lq(t: DenseTensor, groups=None) -> QRResult:
    """``t = L · Q`` with ``Q`` row-isometric and inner dimension ``min(a, b)``."""
    mat, ldims, rdims = _as_matrix(t, groups)
    q, r = _qr_positive(mat.conj().T)
    k = q.shape[1]
    return QRResult(_wrap(r.conj().T, ldims + (k,)), _wrap(q.conj().T, (k,) + rdims), 0.0, 1.0)


def polar(
    t: DenseTensor,
    groups=None,
    right: bool = True,
    spec: TruncationSpec = NO_TRUNCATION,
) -> tuple[DenseTensor, DenseTensor]:
    """Polar decomposition built from the truncated SVD ``M = U·D·Vdag``.

    ``right=True`` returns ``(U·Vdag, V·D·Vdag)`` whose inner index spans the
    second group; ``right=False`` returns ``(U·D·U^H, U·Vdag)`` whose inner
    index spans the first group.  Either way the exterior indices keep their
    original shapes.
    """
    mat, ldims, rdims = _as_matrix(t, groups)
    res = svd(_wrap(mat, mat.shape), None, spec)
    u = res.U.to_array()
    vh = res.Vdag.to_array()
    s = res.singular_values
    unitary = u @ vh
    if right:
        positive = (vh.conj().T * s[None, :]) @ vh
        inner = positive.shape[0]
        return _wrap(unitary, ldims + (inner,)), _wrap(positive, (inner,) + rdims)
    positive = (u * s[None, :]) @ u.conj().T
    inner = positive.shape[1]
    return _wrap(positive, ldims + (inner,)), _wrap(unitary, (inner,) + rdims)
