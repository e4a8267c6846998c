"""Per-site tensor files for networks too large to keep in memory.

Each tensor lives in its own file: the 5-byte magic ``DTNS1``, a u8 scalar
tag (0 real, 1 complex), a u32 rank, ``rank`` u64 dims and the little-endian
payload in leftmost-fastest order.  A JSON manifest per store lists the site
files, the scalar tag and (for states) the orthogonality center.
"""

from __future__ import annotations

import json
import struct
from collections.abc import MutableSequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, StorageError
from .tensor import DenseTensor

MAGIC = b"DTNS1"
EXTENSION = ".dmrjulia"
REAL, COMPLEX = 0, 1
_DTYPES = {REAL: np.dtype("<f8"), COMPLEX: np.dtype("<c16")}


def _tag(t: DenseTensor) -> int:
    return COMPLEX if t.is_complex else REAL


def write_tensor(path: str | Path, t: DenseTensor) -> None:
    """Write one tensor file."""
    tag = _tag(t)
    header = MAGIC + struct.pack("<BI", tag, t.rank) + struct.pack(f"<{t.rank}Q", *t.dims)
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(np.ascontiguousarray(t.data, dtype=_DTYPES[tag]).tobytes())
    except OSError as exc:
        raise StorageError(f"cannot write {path}: {exc}") from exc


def read_tensor(path: str | Path, expect_tag: int | None = None) -> DenseTensor:
    """Read one tensor file; a scalar tag other than ``expect_tag`` is a format error."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise StorageError(f"cannot read {path}: {exc}") from exc
    if raw[:5] != MAGIC or len(raw) < 10:
        raise FormatError(f"{path} is not a tensor file")
    tag, rank = struct.unpack_from("<BI", raw, 5)
    if tag not in _DTYPES:
        raise FormatError(f"{path} has unknown scalar tag {tag}")
    if expect_tag is not None and tag != expect_tag:
        raise FormatError(f"{path} has scalar tag {tag}, store expects {expect_tag}")
    off = 10
    dims = struct.unpack_from(f"<{rank}Q", raw, off)
    off += 8 * rank
    dtype = _DTYPES[tag]
    count = int(np.prod(dims, dtype=np.int64)) if rank else 1
    if len(raw) - off != count * dtype.itemsize:
        raise FormatError(f"{path} payload length does not match dims {dims}")
    data = np.frombuffer(raw, dtype=dtype, count=count, offset=off).astype(dtype.newbyteorder("="))
    return DenseTensor(dims, data)


@dataclass
class DiskStore:
    """Location and metadata of a disk-backed tensor chain."""

    directory: Path
    prefix: str
    kind: str
    length: int
    scalar: int = REAL
    oc: int | None = None
    reads: int = field(default=0, compare=False)

    @property
    def manifest_path(self) -> Path:
        return self.directory / f"{self.prefix}manifest.json"

    def site_path(self, i: int) -> Path:
        return self.directory / f"{self.prefix}{i}{EXTENSION}"

    def write_manifest(self) -> None:
        doc = {
            "kind": self.kind,
            "length": self.length,
            "scalar": "complex" if self.scalar == COMPLEX else "real",
            "oc": self.oc,
            "files": [self.site_path(i).name for i in range(self.length)],
        }
        try:
            self.manifest_path.write_text(json.dumps(doc, indent=1))
        except OSError as exc:
            raise StorageError(f"cannot write manifest {self.manifest_path}: {exc}") from exc

    @classmethod
    def open(cls, directory: str | Path, prefix: str) -> "DiskStore":
        directory = Path(directory)
        path = directory / f"{prefix}manifest.json"
        try:
            doc = json.loads(path.read_text())
        except OSError as exc:
            raise StorageError(f"cannot read manifest {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise FormatError(f"manifest {path} is not valid JSON") from exc
        scalar = COMPLEX if doc.get("scalar") == "complex" else REAL
        return cls(directory, prefix, doc["kind"], int(doc["length"]), scalar, doc.get("oc"))


class DiskTensorList(MutableSequence):
    """List-like view over a store; every access reads or writes one file.

    ``None`` entries (unset environments) are represented by a missing file.
    Writing a complex tensor into a real store upgrades the whole store.
    """

    def __init__(self, store: DiskStore):
        self.store = store

    def __len__(self) -> int:
        return self.store.length

    def _index(self, i: int) -> int:
        if i < 0:
            i += self.store.length
        if not 0 <= i < self.store.length:
            raise IndexError(i)
        return i

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        i = self._index(i)
        path = self.store.site_path(i)
        if not path.exists():
            return None
        self.store.reads += 1
        t = read_tensor(path)
        if _tag(t) != self.store.scalar:
            if self.store.scalar == COMPLEX:
                t = t.astype(np.complex128)
            else:
                raise FormatError(f"{path} is complex but the store is real")
        return t

    def __setitem__(self, i, t: DenseTensor | None):
        i = self._index(i)
        path = self.store.site_path(i)
        if t is None:
            path.unlink(missing_ok=True)
            return
        if t.is_complex and self.store.scalar == REAL:
            self.store.scalar = COMPLEX
            self.store.write_manifest()
        elif not t.is_complex and self.store.scalar == COMPLEX:
            t = t.astype(np.complex128)
        write_tensor(path, t)

    def __delitem__(self, i):
        raise TypeError("disk-backed chains have fixed length")

    def insert(self, i, value):
        raise TypeError("disk-backed chains have fixed length")


def create_store(tensors, directory: str | Path, prefix: str, kind: str, oc: int | None = None):
    """Write ``tensors`` into a fresh store and return the lazy list over it."""
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise StorageError(f"cannot create {directory}: {exc}") from exc
    tensors = list(tensors)
    scalar = COMPLEX if any(t is not None and t.is_complex for t in tensors) else REAL
    store = DiskStore(directory, prefix, kind, len(tensors), scalar, oc)
    store.write_manifest()
    out = DiskTensorList(store)
    for i, t in enumerate(tensors):
        out[i] = t
    return out
