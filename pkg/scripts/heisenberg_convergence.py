"""Sweep-by-sweep energy of the open Heisenberg chain at several bond dimensions."""

import argparse
import time

from densedmrg import DmrgParams, TruncationSpec, dmrg, heisenberg_mpo, rand_mps


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=100)
    ap.add_argument("--ms", type=int, nargs="+", default=[50, 100])
    ap.add_argument("--sweeps", type=int, default=10)
    ap.add_argument("--lanczos-iters", type=int, default=4)
    args = ap.parse_args()

    h = heisenberg_mpo(1.0, args.N)
    final = {}
    print("# m sweep energy max_truncerr")
    for m in args.ms:
        start = time.perf_counter()
        params = DmrgParams(sweeps=args.sweeps, spec=TruncationSpec(m, 1e-12), lanczos_iters=args.lanczos_iters)
        rep = dmrg(rand_mps(2, args.N, 8, seed=5), h, params)
        for s, (e, err) in enumerate(zip(rep.energies, rep.max_truncerr)):
            print(f"{m}\t{s}\t{e:.17g}\t{err:.3g}")
        final[m] = rep.energy
        print(f"# m={m}: {time.perf_counter() - start:.1f} s, converged={rep.converged}")
    ref = final[max(final)]
    for m, e in sorted(final.items()):
        print(f"# m={m}: E/N={e / args.N:.12f}  rel. diff to m={max(final)}: {abs(e - ref) / abs(ref):.2e}")


if __name__ == "__main__":
    main()
