"""Batch front end: ``densedmrg run <config> [--out DIR] [--threads K] [--verify]``.

Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 model error,
4 resource guard, 5 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from contextlib import nullcontext
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .config import RunConfig, parse_config
from .dmrg import DmrgReport, dmrg
from .ed import DEFAULT_GUARD, full_h, krylov_ground
from .errors import ConfigError, DecompositionError, ModelError, NormalizationError, ResourceError
from .measure import align_bond_signs, correlation_length, correlation_matrix, entanglement_profile, expect_local, transfer_matrix
from .models import build_mpo, operator_set
from .network import MPO, MPS, apply_local_ops, ferro_state, large_mpo, large_mps, move_oc, rand_mps, staggered_state

__all__ = ["main", "run", "execute", "initial_state", "RunResult", "EXIT_CODES"]

log = logging.getLogger("densedmrg")

EXIT_CODES = {"ok": 0, "io": 1, "config": 2, "model": 3, "resource": 4, "numerical": 5}
DENSE_EIGH_LIMIT = 4096


@dataclass
class RunResult:
    config: RunConfig
    report: DmrgReport
    psi: MPS
    mpo: MPO
    wall_time: float
    files: list[Path] = field(default_factory=list)
    ed_energy: float | None = None
    xi: float | None = None


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_tsv(path: Path, header: str, rows) -> Path:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {header}\n")
        for row in rows:
            fh.write("\t".join(row) + "\n")
    return path


def initial_state(cfg: RunConfig, d: int, n: int) -> MPS:
    """Starting MPS named by ``cfg.init``."""
    if cfg.init == "random":
        return rand_mps(d, n, cfg.init_m, seed=cfg.seed)
    base = cfg.init if cfg.init != "ops" else cfg.init_base
    psi = ferro_state(d, n, cfg.init_index) if base == "ferro" else staggered_state(d, n)
    if cfg.init == "ops":
        table = operator_set(cfg.model)
        trail = None if cfg.init_trail is None else table[cfg.init_trail]
        for name, site in cfg.init_ops:
            psi = apply_local_ops(psi, [site], table[name], trail)
    return psi


def execute(cfg: RunConfig) -> tuple[MPS, MPO, DmrgReport]:
    """Build the model and starting state and run DMRG (no files written)."""
    spec = cfg.model_spec()
    mpo = build_mpo(spec)
    psi = initial_state(cfg, spec.physical_dim, spec.n_sites)
    if cfg.disk:
        store = Path(cfg.out) / "disk"
        psi = large_mps(psi, store)
        mpo = large_mpo(mpo, store)
    report = dmrg(psi, mpo, cfg.dmrg_params())
    if not all(math.isfinite(e) for e in report.energies):
        raise ArithmeticError("DMRG produced a non-finite energy")
    return psi, mpo, report


def _ed_ground(mpo: MPO) -> float:
    h = full_h(mpo)
    if h.shape[0] <= DENSE_EIGH_LIMIT:
        return float(np.linalg.eigvalsh(h)[0])
    v0 = np.random.default_rng(0).standard_normal(h.shape[0])
    return float(krylov_ground(h, v0, maxiter=2000)[1])


def _write_outputs(cfg: RunConfig, res: RunResult) -> None:
    out = Path(cfg.out)
    rep = res.report
    res.files.append(
        _write_tsv(
            out / "energy.tsv",
            "sweep energy max_truncerr svn",
            ([str(s), _fmt(e), _fmt(err), _fmt(s_)] for s, (e, err, s_) in enumerate(zip(rep.energies, rep.max_truncerr, rep.svn))),
        )
    )
    if cfg.entropy:
        prof = entanglement_profile(res.psi)
        res.files.append(_write_tsv(out / "svn.tsv", "bond svn", ([str(b), _fmt(s)] for b, s in enumerate(prof))))
    table = operator_set(cfg.model)
    for name in cfg.local_ops:
        vals = np.real_if_close(expect_local(res.psi, table[name]))
        res.files.append(_write_tsv(out / f"local_{name}.tsv", "site value", ([str(i), _fmt(np.real(v))] for i, v in enumerate(vals))))
    for pair in cfg.corr:
        a, b = pair[0], pair[1]
        trail = table[pair[2]] if len(pair) == 3 else None
        c = correlation_matrix(res.psi, table[a], table[b], trail)
        n = c.shape[0]
        if np.iscomplexobj(c):
            rows = ([str(i), str(j), _fmt(c[i, j].real), _fmt(c[i, j].imag)] for i in range(n) for j in range(n))
            header = "i j re im"
        else:
            rows = ([str(i), str(j), _fmt(c[i, j])] for i in range(n) for j in range(n))
            header = "i j value"
        res.files.append(_write_tsv(out / f"corr_{a}_{b}.tsv", header, rows))
    if cfg.transfer is not None:
        first, last = cfg.transfer
        n = res.psi.N
        # keep the orthogonality center outside the window so every window tensor is an isometry
        center = first - 1 if first > 0 else (last + 1 if last + 1 < n else first)
        work = align_bond_signs(move_oc(res.psi.copy(), center), first, last)
        res.xi, _ = correlation_length(transfer_matrix(work, first, last))
    if res.ed_energy is not None:
        res.files.append(
            _write_tsv(
                out / "verify.txt",
                "quantity dmrg ed delta",
                [["energy", _fmt(rep.energy), _fmt(res.ed_energy), _fmt(rep.energy - res.ed_energy)]],
            )
        )
    lines = [
        ("model", cfg.model),
        ("sites", str(res.psi.N)),
        ("energy", _fmt(rep.energy)),
        ("sweeps_run", str(rep.sweeps_run)),
        ("converged", str(rep.converged).lower()),
        ("max_truncerr", _fmt(max(rep.max_truncerr))),
        ("svn_bond", str(rep.svn_bond)),
        ("bond_dims", ",".join(str(b) for b in rep.bond_dims)),
        ("wall_time_s", _fmt(res.wall_time)),
    ]
    if res.xi is not None:
        lines.append(("xi", _fmt(res.xi)))
    if res.ed_energy is not None:
        lines.append(("ed_energy", _fmt(res.ed_energy)))
    res.files.append(_write_tsv(out / "report.txt", "key value", ([k, v] for k, v in lines)))


def run(config: RunConfig | str | Path, *, out: str | None = None, threads: int | None = None, verify: bool | None = None) -> RunResult:
    """Parse (if needed), run and write every output file; errors propagate."""
    if isinstance(config, RunConfig):
        cfg = config
    else:
        cfg = parse_config(config, out=out, threads=threads, verify=verify or None)
    spec = cfg.model_spec()
    if cfg.verify and spec.physical_dim**spec.n_sites > DEFAULT_GUARD:
        raise ResourceError(
            f"verify needs a dense {spec.physical_dim}^{spec.n_sites} vector, above the guard {DEFAULT_GUARD}"
        )
    Path(cfg.out).mkdir(parents=True, exist_ok=True)
    limits = threadpool_limits(limits=cfg.threads) if cfg.threads else nullcontext()
    with limits:
        start = time.perf_counter()
        psi, mpo, report = execute(cfg)
        wall = time.perf_counter() - start
        res = RunResult(cfg, report, psi, mpo, wall)
        if cfg.verify:
            res.ed_energy = _ed_ground(mpo)
        _write_outputs(cfg, res)
    return res


def _classify(exc: BaseException) -> str:
    if isinstance(exc, ModelError):
        return "model"
    if isinstance(exc, ConfigError):
        return "config"
    if isinstance(exc, (ResourceError, MemoryError)):
        return "resource"
    if isinstance(exc, (DecompositionError, NormalizationError, ArithmeticError, np.linalg.LinAlgError)):
        return "numerical"
    if isinstance(exc, (ValueError, KeyError, IndexError)):
        return "model"
    if isinstance(exc, OSError):
        return "io"
    raise exc


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="densedmrg", description="Two-site DMRG batch runner.")
    p.add_argument("-v", "--verbose", action="store_true", help="log per-sweep progress")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one configuration file")
    r.add_argument("config", help="path to a key = value configuration")
    r.add_argument("--out", help="output directory (overrides the config)")
    r.add_argument("--threads", type=int, help="BLAS/LAPACK thread count")
    r.add_argument("--verify", action="store_true", help="compare against exact diagonalization")
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        res = run(args.config, out=args.out, threads=args.threads, verify=args.verify)
    except Exception as exc:  # mapped to documented exit codes
        kind = _classify(exc)
        print(f"densedmrg: {kind} error: {exc}", file=sys.stderr)
        return EXIT_CODES[kind]
    print(f"energy {_fmt(res.report.energy)}  sweeps {res.report.sweeps_run}  output {res.config.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
