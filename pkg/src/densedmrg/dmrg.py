"""Two-site DMRG ground-state search."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .decompositions import TruncationSpec, svd
from .errors import InternalStateError, NormalizationError, ShapeError
from .lanczos import lanczos
from .network import MPO, MPS, Environment, make_env, move_oc, mpo_layer, update_left, update_right
from .tensor import DenseTensor, contract, norm

__all__ = [
    "DmrgParams",
    "DmrgReport",
    "TwoSiteProblem",
    "StepResult",
    "heff_apply",
    "lanczos_ground",
    "dmrg_sweep_step",
    "dmrg",
    "entropy",
]

log = logging.getLogger(__name__)


def entropy(weights) -> float:
    """Von Neumann entropy ``-sum p ln p`` of (unnormalized) Schmidt weights."""
    p = np.asarray(weights, dtype=float)
    total = p.sum()
    if total <= 0:
        return 0.0
    p = p[p > 0] / total
    return float(-(p * np.log(p)).sum())


@dataclass(frozen=True)
class DmrgParams:
    """Sweep controls.

    ``schedule`` entry ``s`` is an ``(m, cutoff)`` pair for sweep ``s``;
    sweeps past its end reuse the last entry, and without a schedule every
    sweep uses ``spec``.  Convergence compares consecutive sweep-end energies
    (``cvg_energy``) or entropies at ``svn_bond``; when ``goal`` is set the
    comparison is against ``goal`` instead.
    """

    sweeps: int = 10
    spec: TruncationSpec = TruncationSpec(m=100, cutoff=1e-9)
    lanczos_iters: int = 2
    cvg_energy: bool = True
    goal: float | None = None
    tol: float = 1e-8
    svn_bond: int | None = None
    schedule: tuple = ()

    def __post_init__(self):
        if self.sweeps < 1:
            raise ValueError(f"sweeps must be positive, got {self.sweeps}")
        if self.lanczos_iters < 1:
            raise ValueError(f"lanczos_iters must be at least 1, got {self.lanczos_iters}")
        if len(self.schedule) > self.sweeps:
            raise ValueError("schedule has more entries than sweeps")
        if self.tol < 0:
            raise ValueError("tol must be non-negative")

    def spec_for(self, sweep: int) -> TruncationSpec:
        if not self.schedule:
            return self.spec
        m, cutoff = self.schedule[min(sweep, len(self.schedule) - 1)]
        return TruncationSpec(int(m), float(cutoff), self.spec.mag)


@dataclass(frozen=True)
class DmrgReport:
    energies: list[float]
    max_truncerr: list[float]
    svn: list[float]
    bond_dims: list[int]
    sweeps_run: int
    converged: bool
    svn_bond: int
    step_energies: list[list[float]] = field(default_factory=list, repr=False)

    @property
    def energy(self) -> float:
        return self.energies[-1]


@dataclass
class TwoSiteProblem:
    """Effective problem for sites ``(i, i+1)``: ``L`` ``(dual, b, ket)``, ``R`` ``(ket, b, dual)``."""

    L: DenseTensor
    W1: DenseTensor
    W2: DenseTensor
    R: DenseTensor
    psi: DenseTensor

    def __post_init__(self):
        l, s1, s2, r = self.psi.dims
        ok = (
            self.L.dims[2] == l
            and self.W1.dims[2] == s1
            and self.W2.dims[2] == s2
            and self.R.dims[0] == r
            and self.L.dims[1] == self.W1.dims[0]
            and self.W1.dims[3] == self.W2.dims[0]
            and self.W2.dims[3] == self.R.dims[1]
        )
        if not ok:
            raise ShapeError(
                f"inconsistent two-site problem: L{self.L.dims} W1{self.W1.dims} "
                f"W2{self.W2.dims} R{self.R.dims} psi{self.psi.dims}"
            )


def heff_apply(p: TwoSiteProblem, v: DenseTensor) -> DenseTensor:
    """``H_eff v`` contracted in the order L, W1, W2, R (H_eff never formed)."""
    t = contract(p.L, [2], v, [0])  # (l', b, s1, s2, r)
    t = mpo_layer(t, 1, p.W1, "left")  # (l', s1', b1, s2, r)
    t = mpo_layer(t, 2, p.W2, "left")  # (l', s1', s2', b2, r)
    return contract(t, [3, 4], p.R, [1, 0])  # (l', s1', s2', r')


def lanczos_ground(p: TwoSiteProblem, iters: int = 2, **kwargs) -> tuple[float, DenseTensor, int]:
    """Lowest Ritz value, its normalized vector and the number of Krylov vectors used."""
    dims = p.psi.dims

    def matvec(x: np.ndarray) -> np.ndarray:
        return heff_apply(p, DenseTensor(dims, x)).data

    res = lanczos(matvec, p.psi.data, iters, **kwargs)
    return res.energy, DenseTensor(dims, res.vector), res.iterations


class StepResult(NamedTuple):
    energy: float | None
    truncerr: float
    singular_values: np.ndarray


def dmrg_sweep_step(
    psi: MPS,
    mpo: MPO,
    Lenv: Environment,
    Renv: Environment,
    direction: str,
    spec: TruncationSpec,
    lanczos_iters: int = 2,
) -> StepResult:
    """One two-site update moving the orthogonality center one site.

    Rightward steps optimize ``(oc, oc+1)``; leftward steps ``(oc-1, oc)``.
    ``lanczos_iters=0`` skips the solve and only re-splits the block.
    """
    oc = psi.oc
    if direction == "right":
        i = oc
    elif direction == "left":
        i = oc - 1
    else:
        raise ValueError(f"direction must be 'right' or 'left', got {direction!r}")
    j = i + 1
    if i < 0 or j >= psi.N:
        raise InternalStateError(f"no two-site block for oc={oc} moving {direction}")
    L, R = Lenv[i], Renv[j]
    if L is None or R is None:
        raise InternalStateError(f"environment missing around block ({i}, {j})")
    theta = contract(psi[i], [2], psi[j], [0])
    energy = None
    if lanczos_iters > 0:
        problem = TwoSiteProblem(L, mpo[i], mpo[j], R, theta)
        energy, theta, _ = lanczos_ground(problem, lanczos_iters)
    u, d, vdag, truncerr, _ = svd(theta, [[0, 1], [2, 3]], spec)
    if truncerr > 0:
        d = d / norm(d)
    if direction == "right":
        psi[i] = u
        psi[j] = contract(d, [1], vdag, [0])
        Lenv[j] = update_left(L, u, [mpo[i]])
        psi.oc = j
    else:
        psi[i] = contract(u, [2], d, [0])
        psi[j] = vdag
        Renv[i] = update_right(R, vdag, [mpo[j]])
        psi.oc = i
    sv = np.diag(d.to_array()).real.copy()
    return StepResult(energy, truncerr, sv)


def dmrg(psi: MPS, mpo: MPO, params: DmrgParams = DmrgParams()) -> DmrgReport:
    """Run back-and-forth two-site sweeps on ``psi`` (mutated in place).

    Each sweep moves the orthogonality center from site 0 to the right edge
    and back.  Disk-backed states get disk-backed environments in the same
    directory.
    """
    n = psi.N
    if n < 2:
        raise ValueError("two-site DMRG needs at least two sites")
    if mpo.N != n:
        raise ShapeError(f"MPS has {n} sites but MPO has {mpo.N}")
    if params.lanczos_iters < 1:
        raise ValueError("lanczos_iters must be at least 1")
    svn_bond = params.svn_bond if params.svn_bond is not None else max(n // 2 - 1, 0)
    if not 0 <= svn_bond < n - 1:
        raise ValueError(f"svn_bond {svn_bond} outside 0..{n - 2}")

    move_oc(psi, 0)
    nrm = norm(psi[0])
    if nrm == 0 or not math.isfinite(nrm):
        raise NormalizationError("initial state has zero norm")
    psi[0] = psi[0] / nrm
    directory = psi.store.directory if psi.on_disk else None
    Lenv, Renv = make_env(psi, mpo, directory=directory)

    energies: list[float] = []
    truncs: list[float] = []
    svns: list[float] = []
    steps: list[list[float]] = []
    converged = False
    for sweep in range(params.sweeps):
        spec = params.spec_for(sweep)
        max_err = 0.0
        svn = 0.0
        step_e: list[float] = []
        for direction, count in (("right", n - 1), ("left", n - 1)):
            for _ in range(count):
                res = dmrg_sweep_step(psi, mpo, Lenv, Renv, direction, spec, params.lanczos_iters)
                step_e.append(res.energy)
                max_err = max(max_err, res.truncerr)
                # the bond just split sits between min(oc, previous oc) and the next site
                bond = psi.oc - 1 if direction == "right" else psi.oc
                if bond == svn_bond:
                    svn = entropy(res.singular_values**2)
        energy = step_e[-1]
        log.info("sweep %d: E=%.15g truncerr=%.3g SvN=%.6g", sweep, energy, max_err, svn)
        if params.goal is not None:
            prev = params.goal
        elif sweep > 0:
            prev = energies[-1] if params.cvg_energy else svns[-1]
        else:
            prev = None
        energies.append(energy)
        truncs.append(max_err)
        svns.append(svn)
        steps.append(step_e)
        current = energy if params.cvg_energy else svn
        if prev is not None and abs(current - prev) < params.tol:
            converged = True
            break
    return DmrgReport(
        energies=energies,
        max_truncerr=truncs,
        svn=svns,
        bond_dims=psi.bond_dims,
        sweeps_run=len(energies),
        converged=converged,
        svn_bond=svn_bond,
        step_energies=steps,
    )
