"""Observables of matrix product states.

Measurements gauge a private copy of the state, so the caller's MPS is never
modified.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .decompositions import eigen, svd
from .dmrg import entropy
from .errors import ShapeError, SiteRangeError
from .network import MPO, MPS, boundary_env, move_oc, update_left
from .tensor import DenseTensor, contract

__all__ = [
    "entanglement_profile",
    "bond_spectrum",
    "expect_local",
    "correlation_matrix",
    "correlation",
    "expect",
    "TransferMatrix",
    "align_bond_signs",
    "transfer_matrix",
    "correlation_length",
]

log = logging.getLogger(__name__)
IMAG_TOL = 1e-12


def _maybe_real(values):
    arr = np.asarray(values)
    if np.iscomplexobj(arr) and np.nanmax(np.abs(arr.imag), initial=0.0) <= IMAG_TOL:
        return arr.real.copy()
    return arr


def _scalar(value):
    if isinstance(value, complex) and abs(value.imag) <= IMAG_TOL * max(1.0, abs(value)):
        return value.real
    return value


def _work_copy(psi: MPS, oc: int = 0) -> MPS:
    return move_oc(psi.copy(), oc)


# entanglement -------------------------------------------------------------------


def entanglement_profile(psi: MPS) -> np.ndarray:
    """Von Neumann entropy of each bond; entry ``i`` is the cut between sites ``i`` and ``i+1``."""
    work = _work_copy(psi, 0)
    out = np.zeros(work.N - 1)
    for i in range(work.N - 1):
        u, d, vdag, _, _ = svd(work[i], [[0, 1], [2]])
        s = np.diag(d.to_array()).real
        out[i] = entropy(s**2)
        work[i] = u
        work[i + 1] = contract(contract(d, [1], vdag, [0]), [1], work[i + 1], [0])
        work.oc = i + 1
    return out


def bond_spectrum(psi: MPS, bond: int) -> np.ndarray:
    """Normalized Schmidt weights (squared singular values) across ``bond``."""
    if not 0 <= bond < psi.N - 1:
        raise SiteRangeError(f"bond {bond} outside 0..{psi.N - 2}")
    work = _work_copy(psi, bond)
    s = svd(work[bond], [[0, 1], [2]]).singular_values
    rho = s**2
    return rho / rho.sum()


# local and two-point ------------------------------------------------------------------


def _op(op, d: int) -> DenseTensor:
    arr = np.asarray(op)
    if arr.shape != (d, d):
        raise ShapeError(f"operator shape {arr.shape} does not match physical dim {d}")
    return DenseTensor.from_array(arr)


def _onsite_value(a: DenseTensor, op: DenseTensor):
    """``<a| op |a>`` summed over all three indices of a site tensor."""
    return contract(a, [0, 1, 2], contract(op, [1], a, [1], out_order=[1, 0, 2]), [0, 1, 2], conj_a=True)


def expect_local(psi: MPS, op) -> np.ndarray:
    """``<op_i>`` on every site, each from the orthogonality-center tensor alone."""
    work = _work_copy(psi, 0)
    vals = []
    for i in range(work.N):
        move_oc(work, i)
        vals.append(_onsite_value(work[i], _op(op, work[i].dims[1])))
    return _maybe_real(np.array(vals))


def _extend(L: DenseTensor, a: DenseTensor, op: DenseTensor | None) -> DenseTensor:
    """Left transfer ``(dual, ket)`` through one site with ``op`` on the physical index."""
    t = contract(L, [1], a, [0])  # (dual, s, r)
    if op is not None:
        t = contract(t, [1], op, [1], out_order=[0, 2, 1])
    return contract(a, [0, 1], t, [0, 1], conj_a=True)  # (dual', r)


def _close(L: DenseTensor, a: DenseTensor, op: DenseTensor | None):
    """Finish a contraction at a site whose right side is right-isometric."""
    t = contract(L, [1], a, [0])
    if op is not None:
        t = contract(t, [1], op, [1], out_order=[0, 2, 1])
    return contract(a, [0, 1, 2], t, [0, 1, 2], conj_a=True)


def correlation_matrix(psi: MPS, opA, opB, trail=None) -> np.ndarray:
    """``C[i, j] = <opA_i opB_j>`` with ``trail`` on every site between them.

    Site ``i`` carries ``opA @ trail`` and the sites strictly between carry
    ``trail`` (the Jordan-Wigner string of ``opB_j`` left of site ``j``,
    the part left of ``i`` cancelling).  The diagonal is ``<(opA opB)_i>``
    and ``i > j`` is filled by complex conjugation.
    """
    work = _work_copy(psi, 0)
    n = work.N
    out = np.zeros((n, n), dtype=np.complex128)
    for i in range(n):
        move_oc(work, i)
        d = work[i].dims[1]
        A, B = _op(opA, d).to_array(), _op(opB, d).to_array()
        tr = None if trail is None else _op(trail, d)
        out[i, i] = _onsite_value(work[i], _op(A @ B, d))
        first = A if trail is None else A @ np.asarray(trail)
        ldim = work[i].dims[0]
        L = DenseTensor.identity(ldim)
        L = _extend(L, work[i], _op(first, d))
        for j in range(i + 1, n):
            out[i, j] = _close(L, work[j], _op(B, work[j].dims[1]))
            out[j, i] = np.conj(out[i, j])
            if j + 1 < n:
                L = _extend(L, work[j], tr)
    return _maybe_real(out)


def correlation(psi: MPS, ops: Sequence, trail=None) -> np.ndarray:
    """r-point function ``<O_1(i_1) ... O_r(i_r)>`` for every ``i_1 <= ... <= i_r``.

    Operators sharing a site multiply in list order.  With ``trail`` each
    operator carries a string on the sites to its left, so a site holds the
    product of its operators times ``trail`` raised to the number of
    operators further right.  Unordered index tuples are NaN.
    """
    r = len(ops)
    if r < 1:
        raise ValueError("need at least one operator")
    work = _work_copy(psi, 0)
    n = work.N
    d_list = work.physical_dims
    ops_arr = [np.asarray(o) for o in ops]
    trail_arr = None if trail is None else np.asarray(trail)
    cplx = any(np.iscomplexobj(o) for o in ops_arr) or work.is_complex
    out = np.full((n,) * r, np.nan, dtype=np.complex128 if cplx else np.float64)

    def local(x: int, placed: int, count: int):
        d = d_list[x]
        remaining = r - placed - count
        if count == 0 and (trail_arr is None or remaining == 0):
            return None
        mat = np.eye(d)
        for o in ops_arr[placed : placed + count]:
            if o.shape != (d, d):
                raise ShapeError(f"operator shape {o.shape} does not match physical dim {d}")
            mat = mat @ o
        if trail_arr is not None and remaining:
            mat = mat @ np.linalg.matrix_power(trail_arr, remaining)
        return DenseTensor.from_array(mat)

    def recurse(x: int, placed: int, L: DenseTensor, index: tuple):
        for count in range(r - placed, -1, -1):
            op = local(x, placed, count)
            idx = index + (x,) * count
            if placed + count == r:
                out[idx] = _close(L, work[x], op)
            elif x + 1 < n:
                recurse(x + 1, placed + count, _extend(L, work[x], op), idx)

    recurse(0, 0, DenseTensor.identity(1), ())
    return out if not cplx else _maybe_real(out)


# full sandwich ----------------------------------------------------------------------


def expect(psi: MPS, *mpos: MPO, bra: MPS | None = None):
    """``<bra| H1 ... Hk |psi>``; ``bra`` defaults to ``psi`` and no MPOs gives the overlap."""
    n = psi.N
    for h in mpos:
        if h.N != n:
            raise ShapeError(f"MPO has {h.N} sites but MPS has {n}")
    if bra is not None and bra.N != n:
        raise ShapeError(f"bra has {bra.N} sites but ket has {n}")
    L = boundary_env(len(mpos))
    for i in range(n):
        L = update_left(L, psi[i], [h[i] for h in mpos], None if bra is None else bra[i])
    return _scalar(L.data[0].item())


# transfer matrices -----------------------------------------------------------------------


@dataclass(frozen=True)
class TransferMatrix:
    """Transfer matrix of sites ``first..last`` with index order
    ``(dual-left, ket-left, dual-right, ket-right)``."""

    tensor: DenseTensor
    first: int
    last: int

    @property
    def length(self) -> int:
        return self.last - self.first + 1


def _site_transfer(a: DenseTensor) -> DenseTensor:
    return contract(a, [1], a, [1], conj_a=True, out_order=[0, 2, 1, 3])


def align_bond_signs(psi: MPS, first: int, last: int) -> MPS:
    """Copy of ``psi`` with the sign of each bond basis vector inside ``[first, last]`` aligned.

    SVD leaves every Schmidt vector with an arbitrary sign, so neighbouring
    bulk tensors of a converged state can differ by a diagonal +-1 gauge
    even when the state is locally uniform.  The product of window transfer
    matrices then carries a boundary mismatch that biases its eigenvalue
    ratio.  Here each bond ``k -> k+1`` is flipped so that ``A[k+1]``
    overlaps ``A[k]`` positively.  The represented state and the gauge
    conditions are unchanged; bonds between tensors of different shape are
    left alone.
    """
    if not (0 <= first <= last < psi.N):
        raise SiteRangeError(f"invalid site window [{first}, {last}] for {psi.N} sites")
    work = psi.copy()
    for k in range(first + 1, last + 1):
        prev, cur = work[k - 1], work[k]
        if prev.dims != cur.dims:
            continue
        overlap = contract(prev, [0, 1], cur, [0, 1], conj_a=True).to_array().diagonal()
        mag = np.abs(overlap)
        # a unit phase per basis vector (a sign for real states) making each overlap non-negative
        phase = np.where(mag > 0, np.conj(overlap) / np.where(mag > 0, mag, 1.0), 1.0)
        if not work.is_complex:
            phase = phase.real
        if np.all(phase == 1):
            continue
        work[k] = DenseTensor.from_array(cur.to_array() * phase[None, None, :])
        if k + 1 < work.N:
            work[k + 1] = DenseTensor.from_array(work[k + 1].to_array() * np.conj(phase)[:, None, None])
    return work


def transfer_matrix(psi: MPS, i: int, j: int, accumulate_onto: TransferMatrix | None = None) -> TransferMatrix:
    """Product of site transfer matrices from ``i`` to ``j`` inclusive.

    With ``accumulate_onto`` (covering sites up to ``i - 1``) the new sites
    are appended to it.  For correlation lengths the window should hold
    isometries only (orthogonality center outside ``[i, j]``): the center
    tensor connects two differently gauged bond bases and biases the
    eigenvalue ratio.
    """
    if not (0 <= i <= j < psi.N):
        raise SiteRangeError(f"invalid site window [{i}, {j}] for {psi.N} sites")
    if accumulate_onto is not None:
        if accumulate_onto.last != i - 1:
            raise SiteRangeError(f"cannot extend a window ending at {accumulate_onto.last} from site {i}")
        t, first, start = accumulate_onto.tensor, accumulate_onto.first, i
    else:
        t, first, start = _site_transfer(psi[i]), i, i + 1
    for k in range(start, j + 1):
        a = psi[k]
        t = contract(t, [3], a, [0])  # (dl, kl, dr, s, kr')
        t = contract(t, [2, 3], a, [0, 1], conj_b=True, out_order=[0, 1, 3, 2])
    return TransferMatrix(t, first, j)


def correlation_length(tm: TransferMatrix) -> tuple[float, np.ndarray]:
    """``xi = -L / ln|lambda_2 / lambda_1|`` per site, plus the spectrum sorted by modulus.

    A single eigenvalue gives ``xi = 0``; a degenerate leading pair gives ``inf``.
    """
    dl, kl, dr, kr = tm.tensor.dims
    if dl * kl != dr * kr:
        raise ShapeError(f"transfer matrix {tm.tensor.dims} is not square across its left/right pairs")
    vals = eigen(tm.tensor, [[0, 1], [2, 3]]).eigenvalues
    vals = vals[np.argsort(-np.abs(vals), kind="stable")]
    if len(vals) < 2 or abs(vals[0]) == 0:
        return 0.0, vals
    ratio = abs(vals[1]) / abs(vals[0])
    if abs(1.0 - ratio) <= 1e-12:
        return math.inf, vals
    if ratio == 0:
        return 0.0, vals
    if np.iscomplexobj(vals) and abs(np.angle(vals[1] / vals[0])) > 1e-12:
        log.info("subleading transfer eigenvalue has phase %.6g (oscillatory decay)", np.angle(vals[1] / vals[0]))
    return -tm.length / math.log(ratio), vals
