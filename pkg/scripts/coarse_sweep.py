"""Plateau residual of Example 1 against the coarse count at a fixed fine mesh.

A finer coarse mesh should give a lower plateau.
"""

import argparse

from asdsm import algorithm
from asdsm.mesh import MeshConfig
from asdsm.problems import make_problem


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nf", type=int, default=399)
    ap.add_argument("--setting", type=int, default=1)
    ap.add_argument("--max-iter", type=int, default=20)
    args = ap.parse_args()

    problem = make_problem((1, args.setting))
    candidates = [nc for nc in (1, 3, 4, 7, 9, 19, 39) if (args.nf + 1) % (nc + 1) == 0
                  and (args.nf + 1) // (nc + 1) >= 2]
    opts = algorithm.IterationOptions(max_iter=args.max_iter)
    print(f"{'Nc':>4} {'iters':>5} {'r0':>10} {'plateau':>10} {'stop':>10}")
    for nc in candidates:
        state = algorithm.asdsm_iterate(problem, MeshConfig((args.nf,) * 2, (nc,) * 2), opts)
        h = state.history
        print(f"{nc:4d} {state.k:5d} {h[0].res_l2:10.3e} {h[-1].res_l2:10.3e} {state.stop_reason:>10}")


if __name__ == "__main__":
    main()
