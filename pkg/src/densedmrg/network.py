"""Matrix product states, matrix product operators and environments.

Index conventions (all 0-based):

* MPS site tensors are ``(left link, physical, right link)``.
* MPO site tensors are ``(left link, out-physical, in-physical, right link)``.
* ``Lenv[i]`` contracts every site strictly left of ``i`` and has index order
  ``(dual, H1, ..., Hk, ket)``; ``Renv[i]`` contracts every site strictly
  right of ``i`` with order ``(ket, Hk, ..., H1, dual)``.  ``H1`` sits next
  to the bra, ``Hk`` next to the ket, so the sandwich is
  ``<bra| H1 ... Hk |ket>``.
"""

from __future__ import annotations

import math
from collections.abc import Callable, MutableSequence, Sequence
from pathlib import Path

import numpy as np

from .decompositions import NO_TRUNCATION, TruncationSpec, lq, qr, svd
from .errors import FormatError, NormalizationError, ShapeError, SiteRangeError
from .storage import DiskStore, DiskTensorList, create_store, read_tensor
from .tensor import DenseTensor, contract, norm, permute, reshape_group

__all__ = [
    "MPS",
    "MPO",
    "Environment",
    "move_oc",
    "canonicalize",
    "mps_product_state",
    "ferro_state",
    "staggered_state",
    "rand_mps",
    "make_mpo",
    "apply_mpo",
    "boundary_env",
    "update_left",
    "update_right",
    "mpo_layer",
    "make_env",
    "apply_local_ops",
    "disk_save",
    "disk_load",
    "load_mps",
    "load_mpo",
    "large_mps",
    "large_mpo",
]


class _Chain:
    """Shared list behaviour for MPS/MPO/Environment containers."""

    def __init__(self, tensors: MutableSequence):
        self.tensors = tensors if isinstance(tensors, DiskTensorList) else list(tensors)

    def __len__(self) -> int:
        return len(self.tensors)

    def __getitem__(self, i):
        return self.tensors[i]

    def __setitem__(self, i, t):
        self.tensors[i] = t

    def __iter__(self):
        for i in range(len(self.tensors)):
            yield self.tensors[i]

    @property
    def N(self) -> int:
        return len(self.tensors)

    @property
    def store(self) -> DiskStore | None:
        return self.tensors.store if isinstance(self.tensors, DiskTensorList) else None

    @property
    def on_disk(self) -> bool:
        return isinstance(self.tensors, DiskTensorList)


class MPS(_Chain):
    """Chain of rank-3 site tensors with a tracked orthogonality center ``oc``."""

    def __init__(self, tensors, oc: int = 0):
        super().__init__(tensors)
        if self.N == 0:
            raise ShapeError("an MPS needs at least one site")
        self._oc = None
        self.oc = oc

    @property
    def oc(self) -> int:
        return self._oc

    @oc.setter
    def oc(self, value: int) -> None:
        value = int(value)
        if not 0 <= value < self.N:
            raise SiteRangeError(f"orthogonality center {value} outside 0..{self.N - 1}")
        self._oc = value
        store = self.store
        if store is not None and store.oc != value:
            store.oc = value
            store.write_manifest()

    def copy(self) -> "MPS":
        """In-memory copy (tensors are immutable, so sharing them is safe)."""
        return MPS([self.tensors[i] for i in range(self.N)], self.oc)

    @property
    def physical_dims(self) -> list[int]:
        return [self.tensors[i].dims[1] for i in range(self.N)]

    @property
    def bond_dims(self) -> list[int]:
        """Link dimension to the right of each site except the last."""
        return [self.tensors[i].dims[2] for i in range(self.N - 1)]

    @property
    def is_complex(self) -> bool:
        return any(self.tensors[i].is_complex for i in range(self.N))

    def validate(self) -> None:
        for i in range(self.N):
            t = self.tensors[i]
            if t.rank != 3:
                raise ShapeError(f"site {i} tensor has rank {t.rank}, expected 3")
            if i + 1 < self.N and t.dims[2] != self.tensors[i + 1].dims[0]:
                raise ShapeError(f"link mismatch between sites {i} and {i + 1}")
        if self.tensors[0].dims[0] != 1 or self.tensors[self.N - 1].dims[2] != 1:
            raise ShapeError("boundary links of an MPS must have dimension 1")


class MPO(_Chain):
    """Chain of rank-4 operator tensors ``(bl, out, in, br)``."""

    def __init__(self, tensors):
        super().__init__(tensors)
        if self.N == 0:
            raise ShapeError("an MPO needs at least one site")

    @property
    def physical_dims(self) -> list[int]:
        return [self.tensors[i].dims[1] for i in range(self.N)]

    @property
    def link_dims(self) -> list[int]:
        return [self.tensors[i].dims[3] for i in range(self.N - 1)]

    def copy(self) -> "MPO":
        return MPO([self.tensors[i] for i in range(self.N)])

    def validate(self) -> None:
        for i in range(self.N):
            w = self.tensors[i]
            if w.rank != 4:
                raise ShapeError(f"site {i} MPO tensor has rank {w.rank}, expected 4")
            if w.dims[1] != w.dims[2]:
                raise ShapeError(f"site {i} MPO tensor is not square in its physical indices")
            if i + 1 < self.N and w.dims[3] != self.tensors[i + 1].dims[0]:
                raise ShapeError(f"MPO link mismatch between sites {i} and {i + 1}")
        if self.tensors[0].dims[0] != 1 or self.tensors[self.N - 1].dims[3] != 1:
            raise ShapeError("boundary links of an MPO must have dimension 1")


class Environment(_Chain):
    """Per-site cache of left or right partial contractions (``None`` = not built)."""

    def __init__(self, tensors, side: str):
        if side not in ("left", "right"):
            raise ValueError(f"side must be 'left' or 'right', got {side!r}")
        super().__init__(tensors)
        self.side = side


# gauge ------------------------------------------------------------------------


def _check_site(psi: _Chain, site: int) -> int:
    if not 0 <= site < psi.N:
        raise SiteRangeError(f"site {site} outside 0..{psi.N - 1}")
    return site


def move_oc(psi: MPS, target: int) -> MPS:
    """Shift the orthogonality center to ``target`` with QR (right) / LQ (left) steps."""
    _check_site(psi, target)
    oc = psi.oc
    while oc < target:
        q, r, _, _ = qr(psi[oc], [[0, 1], [2]])
        psi[oc] = q
        psi[oc + 1] = contract(r, [1], psi[oc + 1], [0])
        oc += 1
        psi.oc = oc
    while oc > target:
        l, q, _, _ = lq(psi[oc], [[0], [1, 2]])
        psi[oc] = q
        psi[oc - 1] = contract(psi[oc - 1], [2], l, [0])
        oc -= 1
        psi.oc = oc
    return psi


def canonicalize(psi: MPS, oc: int | None = None, normalize: bool = True) -> MPS:
    """Put ``psi`` in mixed-canonical form around ``oc`` regardless of its prior gauge."""
    target = psi.oc if oc is None else _check_site(psi, oc)
    psi.oc = 0
    for i in range(psi.N - 1):
        q, r, _, _ = qr(psi[i], [[0, 1], [2]])
        psi[i] = q
        psi[i + 1] = contract(r, [1], psi[i + 1], [0])
    psi.oc = psi.N - 1
    if normalize:
        nrm = norm(psi[psi.N - 1])
        if nrm == 0 or not math.isfinite(nrm):
            raise NormalizationError("state has zero (or non-finite) norm")
        psi[psi.N - 1] = psi[psi.N - 1] / nrm
    return move_oc(psi, target)


# initial states -----------------------------------------------------------------


def _cycle(dims, n: int) -> list[int]:
    if isinstance(dims, (int, np.integer)):
        return [int(dims)] * n
    dims = list(dims)
    return [int(dims[i % len(dims)]) for i in range(n)]


def mps_product_state(physical_dims, local_states: Sequence, oc: int = 0) -> MPS:
    """Bond-dimension-one MPS from one normalized local vector per site."""
    n = len(local_states)
    dims = _cycle(physical_dims, n)
    tensors = []
    for i, (d, vec) in enumerate(zip(dims, local_states)):
        vec = np.asarray(vec)
        if vec.shape != (d,):
            raise ShapeError(f"site {i} local state has shape {vec.shape}, expected ({d},)")
        if abs(np.linalg.norm(vec) - 1.0) > 1e-12:
            raise NormalizationError(f"site {i} local state has norm {np.linalg.norm(vec)}")
        tensors.append(DenseTensor((1, d, 1), vec))
    return MPS(tensors, oc)


def _basis(d: int, k: int) -> np.ndarray:
    v = np.zeros(d)
    v[k] = 1.0
    return v


def ferro_state(d: int, N: int, index: int = 0, oc: int = 0) -> MPS:
    """Every site in basis state ``index``."""
    return mps_product_state(d, [_basis(d, index)] * N, oc)


def staggered_state(d: int, N: int, oc: int = 0) -> MPS:
    """Alternating basis states 0, 1, 0, 1, ... (a Neel state for spins)."""
    return mps_product_state(d, [_basis(d, i % 2) for i in range(N)], oc)


def rand_mps(d: int, N: int, m: int, oc: int = 0, *, seed) -> MPS:
    """Seeded random MPS with link dims ``min(m, d**(k+1), d**(N-k-1))``, gauged and normalized."""
    if m < 1:
        raise ValueError(f"m must be at least 1, got {m}")
    rng = np.random.default_rng(seed)
    links = [1] + [min(m, d ** (k + 1), d ** (N - k - 1)) for k in range(N - 1)] + [1]
    tensors = [
        DenseTensor((links[i], d, links[i + 1]), rng.standard_normal(links[i] * d * links[i + 1]))
        for i in range(N)
    ]
    return canonicalize(MPS(tensors, 0), oc)


# MPO construction ---------------------------------------------------------------


def _block_tensor(block, d: int, site: int) -> DenseTensor:
    rows = len(block)
    if rows == 0:
        raise ShapeError(f"site {site} block matrix is empty")
    cols = len(block[0])
    if any(len(row) != cols for row in block):
        raise ShapeError(f"site {site} block matrix rows have unequal length")
    cplx = any(
        entry is not None and np.iscomplexobj(entry) for row in block for entry in row
    )
    arr = np.zeros((rows, d, d, cols), dtype=np.complex128 if cplx else np.float64)
    for a, row in enumerate(block):
        for b, entry in enumerate(row):
            if entry is None or (np.isscalar(entry) and entry == 0):
                continue
            op = np.asarray(entry)
            if op.shape != (d, d):
                raise ShapeError(f"site {site} block entry ({a},{b}) has shape {op.shape}, expected ({d},{d})")
            arr[a, :, :, b] = op
    return DenseTensor.from_array(arr)


def make_mpo(H, physical_dims, N: int) -> MPO:
    """Build an MPO from block matrices of local operators.

    ``H`` is a block matrix (list of rows of ``d x d`` operators, ``None`` or 0
    for zero) used on every site, or a callable ``site -> block``.  The first
    site keeps only the bottom row and the last site only the first column.
    ``physical_dims`` may be an int or a list that cycles with its length.
    """
    dims = _cycle(physical_dims, N)
    tensors = []
    for i in range(N):
        block = H(i) if callable(H) else H
        w = _block_tensor(block, dims[i], i)
        arr = w.to_array()
        if i == 0:
            arr = arr[-1:, :, :, :]
        if i == N - 1:
            arr = arr[:, :, :, :1]
        tensors.append(DenseTensor.from_array(arr))
    mpo = MPO(tensors)
    mpo.validate()
    return mpo


def apply_mpo(psi: MPS, mpo: MPO, spec: TruncationSpec = NO_TRUNCATION) -> MPS:
    """MPS for ``mpo |psi>``; not renormalized.

    The exact product has link dims ``(mps link) x (mpo link)``.  A
    left-to-right SVD pass restores canonical form; when ``spec`` is active a
    right-to-left pass truncates.  The returned state has ``oc == psi.oc``.
    """
    if psi.N != mpo.N:
        raise ShapeError(f"MPS has {psi.N} sites but MPO has {mpo.N}")
    tensors = []
    for i in range(psi.N):
        a, w = psi[i], mpo[i]
        if w.dims[2] != a.dims[1]:
            raise ShapeError(f"site {i}: MPO input dim {w.dims[2]} vs MPS physical dim {a.dims[1]}")
        t = contract(w, [2], a, [1], out_order=[3, 0, 1, 4, 2])
        tensors.append(reshape_group(t, [[0, 1], [2], [3, 4]]))
    out = MPS(tensors, 0)
    for i in range(out.N - 1):
        u, d, vdag, _, _ = svd(out[i], [[0, 1], [2]])
        out[i] = u
        out[i + 1] = contract(contract(d, [1], vdag, [0]), [1], out[i + 1], [0])
    out.oc = out.N - 1
    if spec.active:
        for i in range(out.N - 1, 0, -1):
            u, d, vdag, _, _ = svd(out[i], [[0], [1, 2]], spec)
            out[i] = vdag
            out[i - 1] = contract(out[i - 1], [2], contract(u, [1], d, [0]), [0])
            out.oc = i - 1
    return move_oc(out, psi.oc)


# environments -------------------------------------------------------------------


def boundary_env(n_mpos: int, dtype=np.float64) -> DenseTensor:
    """All-ones boundary environment of rank ``2 + n_mpos``."""
    return DenseTensor.ones((1,) * (n_mpos + 2), dtype)


def mpo_layer(t: DenseTensor, pos: int, w: DenseTensor, mode: str) -> DenseTensor:
    """Contract MPO tensor ``w`` onto the adjacent index pair ``(pos, pos+1)`` of ``t``.

    ``mode="left"``: the pair is ``(b, s)`` (link, physical) and becomes
    ``(s', b')``.  ``mode="right"``: the pair is ``(s, b)`` and becomes
    ``(b', s')``.  All other indices keep their places, so the operation is
    a batched matrix product with no reordering of ``t``.
    """
    dims = t.dims
    wl, dout, din, wr = w.dims
    wc = w._cview()  # (br, in, out, bl)
    if mode == "left":
        if dims[pos] != wl or dims[pos + 1] != din:
            raise ShapeError(f"MPO tensor {w.dims} does not fit indices {dims[pos:pos + 2]}")
        mat = wc.transpose(0, 2, 1, 3).reshape(wr * dout, din * wl)
        new = (dout, wr)
    elif mode == "right":
        if dims[pos] != din or dims[pos + 1] != wr:
            raise ShapeError(f"MPO tensor {w.dims} does not fit indices {dims[pos:pos + 2]}")
        mat = wc.transpose(2, 3, 0, 1).reshape(dout * wl, wr * din)
        new = (wl, dout)
    else:
        raise ValueError(f"mode must be 'left' or 'right', got {mode!r}")
    before = math.prod(dims[:pos])
    after = math.prod(dims[pos + 2 :])
    k = dims[pos] * dims[pos + 1]
    out = np.matmul(mat, t._cview().reshape(after, k, before))
    return DenseTensor._trusted(dims[:pos] + new + dims[pos + 2 :], out.reshape(-1))


def update_left(L: DenseTensor, ket: DenseTensor, mpos: Sequence[DenseTensor] = (), bra: DenseTensor | None = None) -> DenseTensor:
    """Extend a left environment by one site: returns ``(dual', H1', ..., Hk', ket')``."""
    bra = ket if bra is None else bra
    k = len(mpos)
    # (dual, b1..bk, s, r)
    t = contract(L, [k + 1], ket, [0])
    for j in range(k, 0, -1):
        # (dual, b1..bj, s, b'_{j+1}.., r) -> (dual, b1..b_{j-1}, s', b'_j.., r)
        t = mpo_layer(t, j, mpos[j - 1], "left")
    # (dual, s, b'_1..b'_k, r) -> (dual', b'_1..b'_k, r)
    return contract(bra, [0, 1], t, [0, 1], conj_a=True)


def update_right(R: DenseTensor, ket: DenseTensor, mpos: Sequence[DenseTensor] = (), bra: DenseTensor | None = None) -> DenseTensor:
    """Extend a right environment by one site: returns ``(ket', Hk', ..., H1', dual')``."""
    bra = ket if bra is None else bra
    k = len(mpos)
    # (l, s, bk..b1, dual)
    t = contract(ket, [2], R, [0])
    for j in range(k, 0, -1):
        # (l, b'_k..b'_{j+1}, s, bj..b1, dual) -> (l, b'_k..b'_j, s', b_{j-1}..b1, dual)
        t = mpo_layer(t, k - j + 1, mpos[j - 1], "right")
    # (l, b'_k..b'_1, s, dual) -> (l, b'_k..b'_1, dual')
    return contract(t, [k + 1, k + 2], bra, [1, 2], conj_b=True)


def make_env(psi: MPS, *mpos: MPO, bra: MPS | None = None, directory: str | Path | None = None):
    """Left environments up to ``psi.oc`` and right environments down to it.

    Entries outside the valid range are ``None``.  With ``directory`` the
    environments are disk-backed.
    """
    for h in mpos:
        if h.N != psi.N:
            raise ShapeError(f"MPO has {h.N} sites but MPS has {psi.N}")
    if bra is not None and bra.N != psi.N:
        raise ShapeError(f"bra has {bra.N} sites but ket has {psi.N}")
    n = psi.N
    cplx = psi.is_complex or any(h[i].is_complex for h in mpos for i in range(h.N))
    edge = boundary_env(len(mpos), np.complex128 if cplx else np.float64)
    left: list = [None] * n
    right: list = [None] * n
    left[0] = edge
    right[n - 1] = edge
    for i in range(psi.oc):
        left[i + 1] = update_left(left[i], psi[i], [h[i] for h in mpos], None if bra is None else bra[i])
    for i in range(n - 1, psi.oc, -1):
        right[i - 1] = update_right(right[i], psi[i], [h[i] for h in mpos], None if bra is None else bra[i])
    if directory is not None:
        left = create_store(left, directory, "Lenv_", "left-environment")
        right = create_store(right, directory, "Renv_", "right-environment")
    return Environment(left, "left"), Environment(right, "right")


# operator application -------------------------------------------------------------


def apply_local_ops(psi: MPS, sites: Sequence[int], op, trail=None) -> MPS:
    """Apply ``op`` at each listed site (in order), with ``trail`` on all sites to its left.

    The state is re-gauged and renormalized afterwards; its orthogonality
    center is unchanged.
    """
    op_t = DenseTensor.from_array(np.asarray(op))
    trail_t = None if trail is None else DenseTensor.from_array(np.asarray(trail))
    for s in sites:
        _check_site(psi, s)
        if op_t.dims != (psi[s].dims[1],) * 2:
            raise ShapeError(f"operator dims {op_t.dims} do not match site {s}")
        psi[s] = contract(op_t, [1], psi[s], [1], out_order=[1, 0, 2])
        if trail_t is not None:
            for j in range(s):
                psi[j] = contract(trail_t, [1], psi[j], [1], out_order=[1, 0, 2])
    return canonicalize(psi, psi.oc)


# disk -------------------------------------------------------------------------------


def disk_save(x: MPS | MPO | Environment, directory: str | Path, prefix: str | None = None) -> DiskStore:
    """Write every site tensor of ``x`` to its own file under ``directory``."""
    if isinstance(x, MPS):
        kind, oc = "mps", x.oc
    elif isinstance(x, MPO):
        kind, oc = "mpo", None
    else:
        kind, oc = f"{x.side}-environment", None
    if prefix is None:
        prefix = {"mps": "psi_", "mpo": "H_"}.get(kind, "env_")
    lst = create_store([x[i] for i in range(x.N)], directory, prefix, kind, oc)
    return lst.store


def disk_load(store: DiskStore, site: int) -> DenseTensor:
    """Read one site tensor; a scalar tag different from the store's is a format error."""
    if not 0 <= site < store.length:
        raise SiteRangeError(f"site {site} outside 0..{store.length - 1}")
    store.reads += 1
    return read_tensor(store.site_path(site), expect_tag=store.scalar)


def load_mps(directory: str | Path, prefix: str = "psi_") -> MPS:
    """Lazily disk-backed MPS over an existing store."""
    store = DiskStore.open(directory, prefix)
    if store.kind != "mps":
        raise FormatError(f"store {prefix!r} holds a {store.kind}, not an mps")
    return MPS(DiskTensorList(store), store.oc or 0)


def load_mpo(directory: str | Path, prefix: str = "H_") -> MPO:
    store = DiskStore.open(directory, prefix)
    if store.kind != "mpo":
        raise FormatError(f"store {prefix!r} holds a {store.kind}, not an mpo")
    return MPO(DiskTensorList(store))


def large_mps(psi: MPS, directory: str | Path, prefix: str = "psi_") -> MPS:
    """Copy ``psi`` to disk and return the disk-backed version."""
    disk_save(psi, directory, prefix)
    return load_mps(directory, prefix)


def large_mpo(mpo: MPO, directory: str | Path, prefix: str = "H_") -> MPO:
    disk_save(mpo, directory, prefix)
    return load_mpo(directory, prefix)
