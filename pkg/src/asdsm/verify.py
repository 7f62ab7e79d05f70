"""Invariant suites behind ``asdsm verify``.

Each check yields ``Check(name, passed, value)``; a suite passes when every
check does.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterator
from dataclasses import dataclass

import numpy as np

from . import algorithm, fdm, linsolve, mesh
from .algorithm import IterationOptions
from .mesh import HOLES, MeshConfig
from .problems import error_norms, make_problem

PROJECTOR_CONFIGS = [
    ((8, 8), (2, 2)),
    ((24, 24), (4, 4)),
    ((99, 99), (9, 9)),
    ((24, 24, 24), (4, 4, 4)),
]


@dataclass
class Check:
    name: str
    passed: bool
    value: float | str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}  {self.value}"


def projector_targets(config: MeshConfig) -> list[str]:
    kinds = ["".join(k) for k in itertools.product("fc", repeat=config.dim)]
    return [k for k in kinds if k != config.fine_kind] + [HOLES]


def projectors() -> Iterator[Check]:
    for fine, coarse in PROJECTOR_CONFIGS:
        config = MeshConfig(fine, coarse)
        for target in projector_targets(config):
            P = mesh.build_projector(config, config.fine_kind, target)
            eye = np.arange(P.target_size)
            ok = np.array_equal(P.apply(P.scatter(eye)), eye)
            src = mesh.fine_indices(config, config.fine_kind)[P.index_map]
            ok &= np.array_equal(src, mesh.fine_indices(config, target))
            ok &= len(np.unique(P.index_map)) == P.target_size
            yield Check(f"projector fine->{target} {fine}/{coarse}", bool(ok), P.target_size)


def partition() -> Iterator[Check]:
    for fine, coarse in PROJECTOR_CONFIGS:
        config = MeshConfig(fine, coarse)
        counts = mesh.multiple_counts(config)
        holes = mesh.point_count(config, HOLES)
        blocks = mesh.hole_blocks(config)
        union = np.concatenate([p for _, p in blocks])
        ok = int(np.sum(counts == 0)) == holes == len(np.unique(union)) == len(union)
        ok &= np.array_equal(np.sort(union), np.flatnonzero(counts == 0))
        yield Check(f"partition {fine}/{coarse}", bool(ok), f"holes={holes} skeleton={int(np.sum(counts > 0))}")


def block_fidelity() -> Iterator[Check]:
    config = MeshConfig((24, 24), (4, 4))
    for setting in (1, 2):
        problem = make_problem((1, setting))
        A = fdm.assemble_operator(config, "ff", problem)
        worst = 0.0
        for hole, pos in mesh.hole_blocks(config):
            diff = (A[pos][:, pos] - fdm.assemble_hole_operator(config, hole, problem)).toarray()
            worst = max(worst, float(np.max(np.abs(diff))))
        yield Check(f"hole blocks equal standalone assembly, example 1 setting {setting}", worst == 0.0, worst)


def planted_skeleton(fine=(24, 24), coarse=(4, 4)) -> Iterator[Check]:
    config = MeshConfig(fine, coarse)
    problem = make_problem((1, 1))
    A = fdm.assemble_operator(config, "ff", problem)
    b = fdm.assemble_rhs(config, "ff", problem)
    u = linsolve.solve(linsolve.factor(A), b)
    skeleton = np.where(mesh.skeleton_mask(config), u, 0.0)
    out = algorithm.fill_holes(skeleton, A, b, config)
    rel = float(np.max(np.abs(out - u)) / np.max(np.abs(u)))
    yield Check(f"planted skeleton reproduces fine solution {fine}/{coarse}", rel <= 1e-10, rel)


def hole_residuals(example, fine, coarse, iterations=20) -> Iterator[Check]:
    problem = make_problem(example)
    config = MeshConfig(fine, coarse, time_axis=problem.time_dependent)
    disc = algorithm.Discretization.build(config, problem)
    P = mesh.build_projector(config, config.fine_kind, HOLES)
    scale = max(1.0, float(np.max(np.abs(disc.b_ff))))
    worst = [0.0]

    def watch(state):
        worst[0] = max(worst[0], float(np.max(np.abs(P.apply(state.r)))) / scale)

    opts = IterationOptions(max_iter=iterations, stagnation_window=0)
    state = algorithm.asdsm_iterate(problem, config, opts, callback=watch, disc=disc)
    res = [row.res_l2 for row in state.history]
    growth = max(b / a for a, b in zip(res, res[1:])) if len(res) > 1 else 1.0
    name = f"example {example[0]} setting {example[1]} {fine}/{coarse}"
    yield Check(f"hole residual {name}", worst[0] <= 1e-10, worst[0])
    yield Check(f"non-increasing residual {name}", growth <= 1 + 1e-12, growth)


def convergence() -> Iterator[Check]:
    problem = make_problem((1, 1))
    errs = []
    for n in (24, 49):
        config = MeshConfig((n, n), (4, 4) if n == 24 else (9, 9))
        errs.append(error_norms(linsolve.oracle_solve_fine(config, problem), problem, config)[0])
    ratio = errs[0] / errs[1]
    yield Check("h-halving max-error ratio (24 -> 49)", 3.0 <= ratio <= 5.0, ratio)
    yield from richardson_improvement()


def richardson_improvement() -> Iterator[Check]:
    config = MeshConfig((24, 24), (4, 4))
    problem = make_problem((1, 1))
    disc = algorithm.Discretization.build(config, problem)
    exact = fdm.sample(problem.exact, mesh.coordinates(config, "cc"))
    u = {k: linsolve.solve(disc.factors[k], disc.b[k]) for k in ("fc", "cf", "cc")}
    p1 = mesh.build_projector(config, "fc", "cc").apply(u["fc"])
    p2 = mesh.build_projector(config, "cf", "cc").apply(u["cf"])
    extrapolated = algorithm.richardson_extrapolate(p1, p2, u["cc"])
    e_hat = np.max(np.abs(extrapolated - exact))
    inputs = [np.max(np.abs(v - exact)) for v in (p1, p2, u["cc"])]
    yield Check("Richardson cross points beat every input", bool(e_hat <= min(inputs)), float(e_hat))


def examples() -> Iterator[Check]:
    for ex in [(1, 1), (1, 2), (3, 1), (3, 2)]:
        yield from hole_residuals(ex, (99, 99), (9, 9))
    for setting in (1, 2):
        yield from hole_residuals((4, setting), (24, 24, 24), (4, 4, 4))


SUITES = {
    "projectors": [projectors],
    "propositions": [partition, block_fidelity, planted_skeleton,
                     lambda: hole_residuals((1, 1), (24, 24), (4, 4))],
    "convergence": [convergence],
    "examples": [examples],
}


def run_suite(name: str) -> list[Check]:
    names = list(SUITES) if name == "all" else [name]
    checks = []
    for n in names:
        for gen in SUITES[n]:
            checks.extend(gen())
    return checks
