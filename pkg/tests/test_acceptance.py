"""Acceptance criteria; each test records one PASS/FAIL line in the session summary."""

import time

import numpy as np
import pytest
import scipy.sparse as sp

from asdsm import algorithm, cli, fdm, linsolve, mesh, verify
from asdsm.algorithm import IterationOptions
from asdsm.mesh import HOLES, MeshConfig
from asdsm.problems import error_norms, make_problem

from conftest import ACCEPTANCE_LINES

CONFIGS = verify.PROJECTOR_CONFIGS


def report(number, title, ok, detail, budget=None, elapsed=None):
    if budget is not None:
        ok = ok and elapsed < budget
        detail = f"{detail}; {elapsed:.2f}s (< {budget}s)"
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}  [{detail}]"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def run_history(example, fine, coarse, max_iter=20, callback=None, **opts):
    problem = make_problem(example)
    config = MeshConfig(fine, coarse, time_axis=problem.time_dependent)
    disc = algorithm.Discretization.build(config, problem)
    state = algorithm.asdsm_iterate(problem, config, IterationOptions(max_iter=max_iter, **opts),
                                    callback=callback, disc=disc)
    return config, disc, state


def test_criterion_01_projector_algebra():
    t0 = time.perf_counter()
    count, ok = 0, True
    for fine, coarse in CONFIGS:
        config = MeshConfig(fine, coarse)
        for target in verify.projector_targets(config):
            P = mesh.build_projector(config, config.fine_kind, target)
            ids = np.arange(P.target_size, dtype=float)
            ok &= np.array_equal(P.apply(P.scatter(ids)), ids)
            M = P.matrix()
            ok &= (M @ M.T - sp.identity(P.target_size)).nnz == 0
            count += 1
    report(1, "projector gather-after-scatter identities", bool(ok), f"{count} projectors",
           1.0, time.perf_counter() - t0)


def test_criterion_02_partition():
    t0 = time.perf_counter()
    ok, details = True, []
    for fine, coarse in CONFIGS:
        config = MeshConfig(fine, coarse)
        counts = mesh.multiple_counts(config)
        holes = mesh.point_count(config, HOLES)
        expected_holes = int(np.prod([(n - 1) * (c + 1) for n, c in zip(config.factors, coarse)]))
        skeleton = int(np.sum(counts > 0))
        ok &= holes == expected_holes and holes + skeleton == int(np.prod(fine))
        ok &= int(np.sum(counts == config.dim)) == mesh.point_count(config, config.coarse_kind)
        union = np.sort(np.concatenate([p for _, p in mesh.hole_blocks(config)]))
        ok &= np.array_equal(union, np.flatnonzero(counts == 0))
        details.append(f"{fine[0]}^{config.dim}: holes={holes}")
    report(2, "fine mesh partition and counts", bool(ok), ", ".join(details), 1.0, time.perf_counter() - t0)


def test_criterion_03_block_fidelity():
    t0 = time.perf_counter()
    config = MeshConfig((24, 24), (4, 4))
    worst = 0.0
    for setting in (1, 2):
        problem = make_problem((1, setting))
        A = fdm.assemble_operator(config, "ff", problem)
        for hole, pos in mesh.hole_blocks(config):
            diff = A[pos][:, pos] - fdm.assemble_hole_operator(config, hole, problem)
            worst = max(worst, float(abs(diff).max()) if diff.nnz else 0.0)
    report(3, "hole blocks equal standalone assembly", worst == 0.0, f"max diff {worst}",
           1.0, time.perf_counter() - t0)


def test_criterion_04_planted_skeleton():
    t0 = time.perf_counter()
    worst = 0.0
    for fine, coarse in [((24, 24), (4, 4)), ((99, 99), (9, 9))]:
        config = MeshConfig(fine, coarse)
        problem = make_problem((1, 2))
        A = fdm.assemble_operator(config, "ff", problem)
        b = fdm.assemble_rhs(config, "ff", problem)
        u = linsolve.oracle_solve_fine(config, problem)
        out = algorithm.fill_holes(np.where(mesh.skeleton_mask(config), u, 0.0), A, b, config)
        worst = max(worst, float(np.max(np.abs(out - u)) / np.max(np.abs(u))))
    report(4, "oracle skeleton reproduces the fine solution", worst <= 1e-10, f"rel err {worst:.2e}",
           5.0, time.perf_counter() - t0)


def _hole_and_monotone(example, fine, coarse):
    """Worst scaled hole residual, largest step ratio and history length over 20 steps."""
    problem = make_problem(example)
    config = MeshConfig(fine, coarse, time_axis=problem.time_dependent)
    P = mesh.build_projector(config, config.fine_kind, HOLES)
    worst = []
    _, disc, state = run_history(example, fine, coarse, stagnation_window=0,
                                 callback=lambda s: worst.append(float(np.max(np.abs(P.apply(s.r))))))
    scale = max(1.0, float(np.max(np.abs(disc.b_ff))))
    res = [h.res_l2 for h in state.history]
    growth = max(b / a for a, b in zip(res, res[1:]))
    return max(worst) / scale, growth, len(res)


CRIT5_CASES = [(1, 1), (1, 2), (3, 1), (3, 2)]


@pytest.fixture(scope="module")
def desk_runs():
    t0 = time.perf_counter()
    runs = {ex: _hole_and_monotone(ex, (99, 99), (9, 9)) for ex in CRIT5_CASES}
    return runs, time.perf_counter() - t0


def test_criterion_05_hole_residual(desk_runs):
    runs, elapsed = desk_runs
    worst = max(r[0] for r in runs.values())
    iters = min(r[2] for r in runs.values())
    report(5, "hole residual stays at solver precision, k=0..20", worst <= 1e-10 and iters == 21,
           f"max scaled {worst:.2e}", 60.0, elapsed)


def test_criterion_06_non_divergence(desk_runs):
    runs, _ = desk_runs
    growth = max(r[1] for r in runs.values())
    report(6, "residual 2-norm non-increasing over 20 steps (2D; 3D in criterion 13)",
           growth <= 1 + 1e-12, f"max step ratio {growth:.12f}")


def test_criterion_07_example1_trend():
    t0 = time.perf_counter()
    _, _, s9 = run_history((1, 1), (399, 399), (9, 9), stagnation_window=0)
    res9 = [h.res_l2 for h in s9.history]
    ratios = [b / a for a, b in zip(res9, res9[1:])]
    first_drop = ratios[0]
    stagnated = any(r >= 0.9 for r in ratios)
    _, _, s19 = run_history((1, 1), (399, 399), (19, 19), stagnation_window=0)
    res19 = [h.res_l2 for h in s19.history]
    ok = first_drop <= 0.5 and stagnated and res19[-1] < res9[-1]
    report(7, "first-step drop, stagnation by k=20, lower plateau with finer coarse mesh", ok,
           f"r1/r0={first_drop:.3f}, final Nc=9 {res9[-1]:.3e} vs Nc=19 {res19[-1]:.3e}",
           180.0, time.perf_counter() - t0)


def test_criterion_08_setting_gap():
    t0 = time.perf_counter()
    r0 = [run_history((1, s), (99, 99), (4, 4), max_iter=0)[2].history[0].res_l2 for s in (1, 2)]
    report(8, "initial residual gap between settings", r0[1] >= 100 * r0[0],
           f"r0 {r0[0]:.3e} vs {r0[1]:.3e} (x{r0[1] / r0[0]:.0f})", 30.0, time.perf_counter() - t0)


def test_criterion_09_irregularity_at_cross_points():
    t0 = time.perf_counter()
    details, ok = [], True
    for setting in (1, 2):
        config, _, state = run_history((2, setting), (99, 99), (9, 9), stagnation_window=0)
        grid = np.abs(algorithm.as_grid(config, "ff", state.r))
        peak = np.array(np.unravel_index(np.argmax(grid), grid.shape)) + 1
        crosses = mesh.fine_indices(config, config.coarse_kind)
        dist = int(np.min(np.max(np.abs(crosses - peak), axis=1)))
        ok &= dist <= 1
        details.append(f"toy {setting}: peak at {tuple(int(i) for i in peak)}, {dist} steps from a cross point")
    report(9, "max |r| after 20 steps sits next to a cross point", bool(ok), "; ".join(details),
           60.0, time.perf_counter() - t0)


def test_criterion_10_discretization_order():
    t0 = time.perf_counter()
    problem = make_problem((1, 1))
    errs = []
    for n, nc in ((24, 4), (49, 9)):
        config = MeshConfig((n, n), (nc, nc))
        errs.append(error_norms(linsolve.oracle_solve_fine(config, problem), problem, config)[0])
    ratio = errs[0] / errs[1]
    report(10, "max-error ratio 24 -> 49", 3.0 <= ratio <= 5.0, f"ratio {ratio:.3f}", 5.0, time.perf_counter() - t0)


def test_criterion_11_richardson():
    t0 = time.perf_counter()
    config = MeshConfig((24, 24), (4, 4))
    problem = make_problem((1, 1))
    disc = algorithm.Discretization.build(config, problem)
    exact = fdm.sample(problem.exact, mesh.coordinates(config, "cc"))
    u = {k: linsolve.solve(disc.factors[k], disc.b[k]) for k in ("fc", "cf", "cc")}
    p1 = mesh.build_projector(config, "fc", "cc").apply(u["fc"])
    p2 = mesh.build_projector(config, "cf", "cc").apply(u["cf"])
    e_hat = float(np.max(np.abs(algorithm.richardson_extrapolate(p1, p2, u["cc"]) - exact)))
    inputs = [float(np.max(np.abs(v - exact))) for v in (p1, p2, u["cc"])]
    report(11, "extrapolated cross points beat every input", e_hat <= min(inputs),
           f"{e_hat:.2e} vs {', '.join(f'{e:.2e}' for e in inputs)}", 5.0, time.perf_counter() - t0)


def test_criterion_12_optimal_scaling():
    t0 = time.perf_counter()
    worst = 0.0
    scan = np.arange(0, 3 + 5e-4, 1e-3)
    for seed in range(10):
        rng = np.random.default_rng(seed)
        A = sp.csr_matrix(rng.standard_normal((25, 25)) + 5 * np.eye(25))
        e = rng.standard_normal(25)
        r = A @ (rng.uniform(0.2, 2.8) * e) + 0.1 * rng.standard_normal(25)
        Ae = A @ e
        brute = scan[np.argmin([np.linalg.norm(r - s * Ae) for s in scan])]
        worst = max(worst, abs(algorithm.optimal_scaling(r, A, e) - brute))
    report(12, "closed-form step length matches brute-force scan", worst <= 1e-3, f"max |diff| {worst:.1e}",
           1.0, time.perf_counter() - t0)


def test_criterion_13_3d_smoke():
    t0 = time.perf_counter()
    details, ok = [], True
    for setting in (1, 2):
        worst, growth, n = _hole_and_monotone((4, setting), (24, 24, 24), (4, 4, 4))
        config = MeshConfig((24, 24, 24), (4, 4, 4))
        closed = mesh.hole_boundary_complete(config, algorithm.skeleton_support(config))
        ok &= worst <= 1e-10 and growth <= 1 + 1e-12 and closed and n == 21
        details.append(f"setting {setting}: hole {worst:.1e}, growth {growth:.12f}, faces {closed}")
    report(13, "3D holes solved, residual non-increasing, faces covered", bool(ok), "; ".join(details),
           180.0, time.perf_counter() - t0)


def test_criterion_14_determinism(tmp_path, monkeypatch):
    outputs = []
    for workers in ("0", "4"):
        monkeypatch.setenv("ASDSM_WORKERS", workers)
        out = tmp_path / f"w{workers}.csv"
        code = cli.main(["run", "--example", "1", "--setting", "1", "--nf", "399", "--nc", "9",
                         "--seed", "0", "--no-timing", "--out", str(out)])
        assert code == 0
        outputs.append(out.read_bytes())
    report(14, "CSV byte-identical for ASDSM_WORKERS=0 and 4", outputs[0] == outputs[1],
           f"{len(outputs[0])} bytes")
