"""Where |r| peaks on the toy problems after a number of steps, over several seeds.

Prints the peak location, its Chebyshev distance (in fine steps) to the
nearest cross point, and how |r| at the cross points compares to their
immediate neighbours.
"""

import argparse

import numpy as np

from asdsm import algorithm, mesh
from asdsm.mesh import MeshConfig
from asdsm.problems import make_problem


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nf", type=int, default=99)
    ap.add_argument("--nc", type=int, default=9)
    ap.add_argument("--iters", type=int, default=20)
    ap.add_argument("--seeds", type=int, default=4)
    args = ap.parse_args()

    for setting in (1, 2):
        problem = make_problem((2, setting))
        config = MeshConfig((args.nf,) * 2, (args.nc,) * 2, time_axis=problem.time_dependent)
        crosses = mesh.fine_indices(config, "cc")
        for seed in range(args.seeds):
            opts = algorithm.IterationOptions(max_iter=args.iters, stagnation_window=0, rng_seed=seed)
            state = algorithm.asdsm_iterate(problem, config, opts)
            grid = np.abs(algorithm.as_grid(config, "ff", state.r))
            peak = np.array(np.unravel_index(np.argmax(grid), grid.shape)) + 1
            dist = int(np.min(np.max(np.abs(crosses - peak), axis=1)))
            at = grid[tuple((crosses - 1).T)]
            padded = np.pad(grid, 1)
            c = crosses
            neigh = np.mean([padded[c[:, 0] + dx, c[:, 1] + dy] for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1))],
                            axis=0)
            print(f"toy {setting} seed {seed}: peak {tuple(int(i) for i in peak)} "
                  f"{dist} steps from a cross point; cross/neighbour |r| median {np.median(at / neigh):.2f}")


if __name__ == "__main__":
    main()
