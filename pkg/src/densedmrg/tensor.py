"""Rank-fluid dense tensors and the basic single- and two-tensor operations.

A :class:`DenseTensor` is nothing but a tuple of index dimensions and a flat
vector of scalars.  The flat vector is linearized with the *leftmost index
varying fastest* (column-major), so regrouping neighbouring indices never
touches the data.

All index positions are 0-based.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from numbers import Number

import numpy as np

from .errors import GroupingError, PermutationError, ShapeError

__all__ = [
    "DenseTensor",
    "permute",
    "reshape_group",
    "unreshape",
    "contract",
    "ccontract",
    "contractc",
    "ccontractc",
    "norm",
    "expand_unit",
    "squeeze_unit",
]


def _coerce_data(data) -> np.ndarray:
    arr = np.asarray(data)
    if arr.dtype == np.complex128 or arr.dtype == np.float64:
        pass
    elif np.iscomplexobj(arr):
        arr = arr.astype(np.complex128)
    else:
        arr = arr.astype(np.float64)
    return arr.reshape(-1)


class DenseTensor:
    """Dense tensor stored as ``dims`` plus a flat, leftmost-fastest ``data`` vector.

    Instances are treated as immutable: ``data`` is exposed as a read-only
    view, so tensors can be shared freely between networks and threads.
    """

    __slots__ = ("dims", "data")

    def __init__(self, dims: Iterable[int], data):
        dims = tuple(int(d) for d in dims)
        if any(d < 1 for d in dims):
            raise ShapeError(f"index dimensions must be positive, got {dims}")
        flat = _coerce_data(data)
        if math.prod(dims) != flat.size:
            raise ShapeError(
                f"prod(dims)={math.prod(dims)} does not match {flat.size} stored elements"
            )
        view = flat.view()
        view.flags.writeable = False
        self.dims = dims
        self.data = view

    # construction -------------------------------------------------------

    @classmethod
    def from_array(cls, array) -> "DenseTensor":
        """Wrap an n-d array; element ``array[i, j, ...]`` keeps its multi-index."""
        arr = np.asarray(array)
        return cls(arr.shape, arr.ravel(order="F"))

    @classmethod
    def zeros(cls, dims: Iterable[int], dtype=np.float64) -> "DenseTensor":
        dims = tuple(dims)
        return cls(dims, np.zeros(math.prod(dims), dtype=dtype))

    @classmethod
    def ones(cls, dims: Iterable[int], dtype=np.float64) -> "DenseTensor":
        dims = tuple(dims)
        return cls(dims, np.ones(math.prod(dims), dtype=dtype))

    @classmethod
    def identity(cls, n: int, dtype=np.float64) -> "DenseTensor":
        return cls.from_array(np.eye(n, dtype=dtype))

    @classmethod
    def scalar(cls, value) -> "DenseTensor":
        return cls((), [value])

    # inspection -----------------------------------------------------------

    @property
    def rank(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def is_complex(self) -> bool:
        return self.data.dtype == np.complex128

    def to_array(self) -> np.ndarray:
        """Read-only n-d view with ``to_array()[i, j, ...]`` the tensor element."""
        return self.data.reshape(self.dims, order="F")

    def item(self):
        if self.size != 1:
            raise ShapeError(f"item() needs a single-element tensor, got dims {self.dims}")
        return self.data[0].item()

    # arithmetic -------------------------------------------------------------

    def conj(self) -> "DenseTensor":
        if not self.is_complex:
            return self
        return DenseTensor(self.dims, np.conj(self.data))

    def astype(self, dtype) -> "DenseTensor":
        return DenseTensor(self.dims, self.data.astype(dtype))

    def __mul__(self, other):
        if isinstance(other, Number):
            return DenseTensor(self.dims, self.data * other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Number):
            return DenseTensor(self.dims, self.data / other)
        return NotImplemented

    def __neg__(self):
        return DenseTensor(self.dims, -self.data)

    def __add__(self, other):
        if not isinstance(other, DenseTensor):
            return NotImplemented
        if other.dims != self.dims:
            raise ShapeError(f"cannot add tensors of dims {self.dims} and {other.dims}")
        return DenseTensor(self.dims, self.data + other.data)

    def __sub__(self, other):
        if not isinstance(other, DenseTensor):
            return NotImplemented
        if other.dims != self.dims:
            raise ShapeError(f"cannot subtract tensors of dims {self.dims} and {other.dims}")
        return DenseTensor(self.dims, self.data - other.data)

    def __repr__(self) -> str:
        return f"DenseTensor(dims={self.dims}, dtype={self.dtype})"

    @classmethod
    def _trusted(cls, dims: tuple, flat: np.ndarray) -> "DenseTensor":
        # internal constructor: caller guarantees dims/size/dtype consistency
        obj = cls.__new__(cls)
        view = flat.view()
        view.flags.writeable = False
        obj.dims = dims
        obj.data = view
        return obj

    def _cview(self) -> np.ndarray:
        # the leftmost-fastest data read as a C-ordered array with reversed dims
        return self.data.reshape(self.dims[::-1])


def _flatten(labels) -> list:
    if isinstance(labels, (list, tuple)) and all(type(x) is int for x in labels):
        return list(labels)
    if isinstance(labels, (int, np.integer)):
        return [int(labels)]
    if isinstance(labels, np.ndarray):
        return [int(x) for x in labels.ravel()]
    out = []
    for item in labels:
        out.extend(_flatten(item))
    return out


def _check_permutation(order: Sequence[int], rank: int) -> list[int]:
    order = _flatten(order)
    if len(order) != rank or sorted(order) != list(range(rank)):
        raise PermutationError(f"{order} is not a permutation of 0..{rank - 1}")
    return order


def _permute_data(t: DenseTensor, order: list[int]) -> np.ndarray:
    r = t.rank
    cperm = [r - 1 - order[r - 1 - j] for j in range(r)]
    return np.ascontiguousarray(t._cview().transpose(cperm)).reshape(-1)


def permute(t: DenseTensor, order: Sequence[int]) -> DenseTensor:
    """Reorder the indices of ``t``: output index ``k`` is input index ``order[k]``."""
    order = _check_permutation(order, t.rank)
    if order == list(range(t.rank)):
        return t
    return DenseTensor._trusted(tuple(t.dims[i] for i in order), _permute_data(t, order))


def reshape_group(t: DenseTensor, groups: Sequence[Sequence[int]]) -> DenseTensor:
    """Join each group of indices into one index.

    Groups that are not already in sequential order trigger a permutation
    first; sequential groups only rewrite ``dims``.
    """
    groups = [_flatten(g) for g in groups]
    if any(len(g) == 0 for g in groups):
        raise GroupingError("index groups must be non-empty")
    flat = [i for g in groups for i in g]
    if len(flat) != t.rank or sorted(flat) != list(range(t.rank)):
        raise GroupingError(f"groups {groups} do not partition indices 0..{t.rank - 1}")
    if flat != list(range(t.rank)):
        t = permute(t, flat)
    dims = []
    pos = 0
    for g in groups:
        dims.append(math.prod(t.dims[pos : pos + len(g)]))
        pos += len(g)
    return DenseTensor(dims, t.data)


def unreshape(t: DenseTensor, dims: Iterable[int]) -> DenseTensor:
    """Replace the index dimensions of ``t`` without touching its data."""
    dims = tuple(int(d) for d in dims)
    if math.prod(dims) != t.size:
        raise ShapeError(f"cannot unreshape {t.size} elements into dims {dims}")
    return DenseTensor(dims, t.data)


def expand_unit(t: DenseTensor, position: int) -> DenseTensor:
    """Insert a dimension-1 index at ``position``."""
    dims = list(t.dims)
    dims.insert(position, 1)
    return DenseTensor(dims, t.data)


def squeeze_unit(t: DenseTensor, positions: Iterable[int] | None = None) -> DenseTensor:
    """Remove dimension-1 indices (all of them when ``positions`` is None)."""
    if positions is None:
        keep = [d for d in t.dims if d != 1]
    else:
        drop = set(_flatten(list(positions)))
        if any(t.dims[p] != 1 for p in drop):
            raise ShapeError(f"indices {sorted(drop)} are not all of dimension 1 in {t.dims}")
        keep = [d for i, d in enumerate(t.dims) if i not in drop]
    return DenseTensor(keep, t.data)


def _ct_matrix(t: DenseTensor, rows: list[int], cols: list[int]) -> np.ndarray:
    """C-ordered transpose of the leftmost-fastest matrix (rows x cols) of ``t``.

    Returned shape is ``(prod cols, prod rows)``.
    """
    dims = t.dims
    r = len(dims)
    cperm = [r - 1 - i for i in reversed(cols)] + [r - 1 - i for i in reversed(rows)]
    nrow = 1
    for i in cols:
        nrow *= dims[i]
    arr = t.data.reshape(dims[::-1])
    if cperm != list(range(r)):
        arr = arr.transpose(cperm)
    return arr.reshape(nrow, -1) if nrow else arr.reshape(0, -1)


def contract(
    a: DenseTensor,
    axes_a,
    b: DenseTensor,
    axes_b,
    *,
    conj_a: bool = False,
    conj_b: bool = False,
    alpha=1.0,
    beta=1.0,
    addend: DenseTensor | None = None,
    out_order: Sequence[int] | None = None,
):
    """Contract ``a`` and ``b`` over paired index lists.

    The result carries the uncontracted indices of ``a`` followed by those of
    ``b``, optionally permuted by ``out_order``; its value is
    ``alpha * op(a)·op(b) + beta * addend``.  A fully contracted result is
    returned as a Python scalar.
    """
    ax_a = _flatten(axes_a)
    ax_b = _flatten(axes_b)
    da, db = a.dims, b.dims
    ra, rb = len(da), len(db)
    if len(ax_a) != len(ax_b):
        raise ShapeError(f"contracting {len(ax_a)} indices of a against {len(ax_b)} of b")
    for axes, rank, name in ((ax_a, ra, "a"), (ax_b, rb, "b")):
        if axes and (len(set(axes)) != len(axes) or min(axes) < 0 or max(axes) >= rank):
            raise ShapeError(f"bad contraction indices {axes} for tensor {name} of rank {rank}")
    for i, j in zip(ax_a, ax_b):
        if da[i] != db[j]:
            raise ShapeError(f"index {i} of a (dim {da[i]}) does not match index {j} of b (dim {db[j]})")
    free_a = [i for i in range(ra) if i not in ax_a]
    free_b = [j for j in range(rb) if j not in ax_b]
    # R = Ma @ Mb with leftmost-fastest storage, computed as R^T = Mb^T @ Ma^T in C order
    mat_b = _ct_matrix(b, ax_b, free_b)  # (free_b, contracted)
    mat_a = _ct_matrix(a, free_a, ax_a)  # (contracted, free_a)
    if conj_a and a.data.dtype.kind == "c":
        mat_a = mat_a.conj()
    if conj_b and b.data.dtype.kind == "c":
        mat_b = mat_b.conj()
    prod = mat_b @ mat_a
    if alpha != 1:
        prod = alpha * prod
    dims = tuple([da[i] for i in free_a] + [db[j] for j in free_b])
    if addend is not None:
        if addend.dims != dims:
            raise ShapeError(f"addend dims {addend.dims} do not match result dims {dims}")
        prod = prod + beta * addend.data.reshape(prod.shape)
    if not dims:
        return prod.reshape(-1)[0].item()
    out = DenseTensor._trusted(dims, prod.reshape(-1))
    if out_order is not None:
        out = permute(out, out_order)
    return out


def ccontract(a, axes_a, b, axes_b, **kwargs):
    """:func:`contract` with ``a`` complex-conjugated."""
    return contract(a, axes_a, b, axes_b, conj_a=True, **kwargs)


def contractc(a, axes_a, b, axes_b, **kwargs):
    """:func:`contract` with ``b`` complex-conjugated."""
    return contract(a, axes_a, b, axes_b, conj_b=True, **kwargs)


def ccontractc(a, axes_a, b, axes_b, **kwargs):
    """:func:`contract` with both operands complex-conjugated."""
    return contract(a, axes_a, b, axes_b, conj_a=True, conj_b=True, **kwargs)


def norm(t: DenseTensor) -> float:
    """Frobenius norm."""
    return float(np.linalg.norm(t.data))
