"""Runtime of <psi|H H|psi> versus bond dimension with a log-log fit of the exponent."""

import argparse
import math
import time

import numpy as np

from densedmrg import expect, heisenberg_mpo, hubbard_mpo, rand_mps


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--model", choices=["hubbard", "heisenberg"], default="hubbard")
    ap.add_argument("--N", type=int, default=40)
    ap.add_argument("--ms", type=int, nargs="+", default=[16, 32, 64, 128])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--mpos", type=int, default=2, help="number of H factors in the sandwich")
    args = ap.parse_args()

    if args.model == "hubbard":
        h, d = hubbard_mpo(1.0, 4.0, -2.0, args.N), 4
    else:
        h, d = heisenberg_mpo(1.0, args.N), 2
    times = []
    print("# m best_seconds")
    for m in args.ms:
        psi = rand_mps(d, args.N, m, seed=12)
        expect(psi, *[h] * args.mpos)
        best = math.inf
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            expect(psi, *[h] * args.mpos)
            best = min(best, time.perf_counter() - t0)
        times.append(best)
        print(f"{m}\t{best:.6f}")
    slope = np.polyfit(np.log(args.ms), np.log(times), 1)[0]
    local = np.diff(np.log(times)) / np.diff(np.log(args.ms))
    print(f"# fitted exponent {slope:.2f}; local slopes " + " ".join(f"{x:.2f}" for x in local))


if __name__ == "__main__":
    main()
