"""Local operator sets and model MPOs.

Operators are ``d x d`` numpy arrays indexed ``[out, in]``.  Spin-half basis:
``(up, down)``.  Fermion basis: ``(|0>, |up>, |dn>, |up dn>)`` with
``|up dn> = c_up^dag c_dn^dag |0>``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .errors import ShapeError, SiteRangeError
from .network import MPO, make_mpo

__all__ = [
    "SpinOps",
    "FermionOps",
    "spin_ops",
    "fermion_ops",
    "heisenberg_mpo",
    "tfim_mpo",
    "hubbard_mpo",
    "heisenberg2d_mpo",
    "ModelSpec",
    "add_pinning",
    "build_mpo",
    "operator_set",
]


class SpinOps(NamedTuple):
    Sx: np.ndarray
    Sy: np.ndarray
    Sz: np.ndarray
    Sp: np.ndarray
    Sm: np.ndarray
    Id: np.ndarray
    O: np.ndarray


class FermionOps(NamedTuple):
    Cup: np.ndarray
    Cdn: np.ndarray
    Nup: np.ndarray
    Ndn: np.ndarray
    Ndens: np.ndarray
    F: np.ndarray
    O: np.ndarray
    Id: np.ndarray

    @property
    def Cupdag(self) -> np.ndarray:
        return self.Cup.T.copy()

    @property
    def Cdndag(self) -> np.ndarray:
        return self.Cdn.T.copy()


def spin_ops() -> SpinOps:
    """Spin-half operators with ``Sz = diag(1/2, -1/2)``."""
    sp = np.array([[0.0, 1.0], [0.0, 0.0]])
    sm = sp.T.copy()
    sx = 0.5 * (sp + sm)
    sy = -0.5j * (sp - sm)
    sz = np.diag([0.5, -0.5])
    return SpinOps(sx, sy, sz, sp, sm, np.eye(2), np.zeros((2, 2)))


def fermion_ops() -> FermionOps:
    """Spinful fermion operators; ``Cup``/``Cdn`` annihilate, ``F`` is the sign operator."""
    cupdag = np.zeros((4, 4))
    cupdag[1, 0] = 1.0  # |0>  -> |up>
    cupdag[3, 2] = 1.0  # |dn> -> |up dn>
    cdndag = np.zeros((4, 4))
    cdndag[2, 0] = 1.0  # |0>  -> |dn>
    cdndag[3, 1] = -1.0  # |up> -> -|up dn>
    cup, cdn = cupdag.T.copy(), cdndag.T.copy()
    nup = cupdag @ cup
    ndn = cdndag @ cdn
    f = np.diag([1.0, -1.0, -1.0, 1.0])
    return FermionOps(cup, cdn, nup, ndn, nup + ndn, f, np.zeros((4, 4)), np.eye(4))


def operator_set(model: str) -> dict[str, np.ndarray]:
    """Name -> operator table for a model's local Hilbert space."""
    if model == "hubbard":
        ops = fermion_ops()
        table = dict(ops._asdict())
        table.update(Cupdag=ops.Cupdag, Cdndag=ops.Cdndag)
        return table
    return dict(spin_ops()._asdict())


# model blocks -----------------------------------------------------------------


def _heisenberg_block(J: float, onsite=None) -> list[list]:
    s = spin_ops()
    return [
        [s.Id, None, None, None, None],
        [0.5 * s.Sp, None, None, None, None],
        [0.5 * s.Sm, None, None, None, None],
        [s.Sz, None, None, None, None],
        [onsite, J * s.Sm, J * s.Sp, J * s.Sz, s.Id],
    ]


def heisenberg_mpo(J: float, N: int) -> MPO:
    """``H = J * sum_i S_i . S_{i+1}`` (``J > 0`` antiferromagnetic); bulk link dim 5."""
    if N < 2:
        raise ValueError("the Heisenberg chain needs N >= 2")
    return make_mpo(_heisenberg_block(J), 2, N)


def _tfim_block(g: float, onsite=None) -> list[list]:
    s = spin_ops()
    diag = g * s.Sx if onsite is None else g * s.Sx + onsite
    return [
        [s.Id, None, None],
        [s.Sz, None, None],
        [diag, s.Sz, s.Id],
    ]


def tfim_mpo(g: float, N: int) -> MPO:
    """``H = sum_i Sz_i Sz_{i+1} + g * sum_i Sx_i``; critical at ``g = 1/2``."""
    if N < 2:
        raise ValueError("the Ising chain needs N >= 2")
    return make_mpo(_tfim_block(g), 2, N)


def _hubbard_block(t: float, U: float, mu: float, onsite=None) -> list[list]:
    f = fermion_ops()
    cupdag, cdndag = f.Cupdag, f.Cdndag
    v = mu * f.Ndens + U * (f.Nup @ f.Ndn)
    if onsite is not None:
        v = v + onsite
    return [
        [f.Id, None, None, None, None, None],
        [-t * cupdag, None, None, None, None, None],
        [t * f.Cup, None, None, None, None, None],
        [-t * cdndag, None, None, None, None, None],
        [t * f.Cdn, None, None, None, None, None],
        [v, f.Cup @ f.F, cupdag @ f.F, f.Cdn @ f.F, cdndag @ f.F, f.Id],
    ]


def hubbard_mpo(t: float, U: float, mu: float, N: int) -> MPO:
    """``H = t sum (c^dag_i c_{i+1} + h.c.) + sum (U n_up n_dn + mu n)``; bulk link dim 6."""
    if N < 2:
        raise ValueError("the Hubbard chain needs N >= 2")
    return make_mpo(_hubbard_block(t, U, mu), 4, N)


def _heisenberg2d_block(J: float, Lx: int, Ly: int, site: int, onsite=None) -> list[list]:
    s = spin_ops()
    w = 2 + 3 * Ly
    last = w - 1
    block: list[list] = [[None] * w for _ in range(w)]
    block[0][0] = s.Id
    block[last][last] = s.Id
    y = site % Ly
    # channels: (first-column operator, bottom-row partner)
    channels = [(0.5 * s.Sp, s.Sm), (0.5 * s.Sm, s.Sp), (s.Sz, s.Sz)]
    for o, (first, partner) in enumerate(channels):
        row = lambda k: 1 + o * Ly + (k - 1)  # noqa: E731 - delay-k slot of channel o
        block[row(1)][0] = first
        for k in range(1, Ly):
            block[row(k + 1)][row(k)] = s.Id
        # horizontal neighbour sits Ly sites further along the path
        block[last][row(Ly)] = J * partner
        # vertical neighbour (next site) unless this site ends a column
        if Ly > 1 and y < Ly - 1:
            block[last][row(1)] = J * partner
    block[last][0] = onsite
    return block


def heisenberg2d_mpo(J: float, Lx: int, Ly: int) -> MPO:
    """Open ``Lx x Ly`` Heisenberg lattice on a column-major path (site = x * Ly + y).

    Bulk link dimension is ``2 + 3 * Ly``; the path step from the top of one
    column to the bottom of the next carries no coupling.
    """
    if Lx < 1 or Ly < 1 or Lx * Ly < 2:
        raise ValueError("the lattice needs at least two sites")
    return make_mpo(lambda i: _heisenberg2d_block(J, Lx, Ly, i), 2, Lx * Ly)


# model specs ------------------------------------------------------------------

MODELS = ("heisenberg", "tfim", "hubbard", "heisenberg2d")


@dataclass(frozen=True)
class ModelSpec:
    """Model tag, couplings, lattice extents and on-site pinning terms.

    ``pins`` holds ``(site, operator, coefficient)`` triples; ``operator`` is
    either a name from :func:`operator_set` or a ``d x d`` array.
    """

    model: str
    N: int | None = None
    Lx: int | None = None
    Ly: int | None = None
    J: float = 1.0
    g: float = 0.0
    t: float = 1.0
    U: float = 0.0
    mu: float = 0.0
    pins: tuple = field(default=())

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; choose from {', '.join(MODELS)}")
        if self.model == "heisenberg2d":
            if not self.Lx or not self.Ly or self.Lx < 1 or self.Ly < 1:
                raise ValueError("heisenberg2d needs positive Lx and Ly")
            if self.N is not None and self.N != self.Lx * self.Ly:
                raise ValueError(f"N={self.N} disagrees with Lx*Ly={self.Lx * self.Ly}")
        elif self.N is None or self.N < 2:
            raise ValueError(f"{self.model} needs N >= 2")

    @property
    def n_sites(self) -> int:
        return self.Lx * self.Ly if self.model == "heisenberg2d" else self.N

    @property
    def physical_dim(self) -> int:
        return 4 if self.model == "hubbard" else 2


def _pin_operator(spec: ModelSpec, op) -> np.ndarray:
    if isinstance(op, str):
        table = operator_set(spec.model)
        if op not in table:
            raise KeyError(f"unknown operator {op!r} for model {spec.model}")
        return table[op]
    arr = np.asarray(op)
    d = spec.physical_dim
    if arr.shape != (d, d):
        raise ShapeError(f"pinning operator has shape {arr.shape}, expected ({d},{d})")
    return arr


def add_pinning(spec: ModelSpec, site_terms) -> ModelSpec:
    """Return ``spec`` with extra on-site terms ``(site, operator, coefficient)``.

    Terms with a zero coefficient are dropped.
    """
    extra = []
    for site, op, coeff in site_terms:
        if not 0 <= site < spec.n_sites:
            raise SiteRangeError(f"pinning site {site} outside 0..{spec.n_sites - 1}")
        _pin_operator(spec, op)
        if coeff != 0:
            extra.append((int(site), op, coeff))
    if not extra:
        return spec
    return replace(spec, pins=tuple(spec.pins) + tuple(extra))


def _onsite(spec: ModelSpec, site: int):
    total = None
    for s, op, coeff in spec.pins:
        if s == site:
            term = coeff * _pin_operator(spec, op)
            total = term if total is None else total + term
    return total


def build_mpo(spec: ModelSpec) -> MPO:
    """MPO for ``spec`` including its pinning terms (added to the lower-left entry)."""
    n = spec.n_sites
    if spec.model == "heisenberg":
        return make_mpo(lambda i: _heisenberg_block(spec.J, _onsite(spec, i)), 2, n)
    if spec.model == "tfim":
        return make_mpo(lambda i: _tfim_block(spec.g, _onsite(spec, i)), 2, n)
    if spec.model == "hubbard":
        return make_mpo(lambda i: _hubbard_block(spec.t, spec.U, spec.mu, _onsite(spec, i)), 4, n)
    return make_mpo(
        lambda i: _heisenberg2d_block(spec.J, spec.Lx, spec.Ly, i, _onsite(spec, i)), 2, n
    )
