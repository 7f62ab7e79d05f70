"""Anisotropic submeshes domain splitting.

The fine solution is approximated by solving on meshes that are fine along
all axes but one (the *slabs*), stitching them together on the skeleton and
filling the remaining holes with independent Dirichlet solves.  The outer
iteration repeats this on the residual, with an optimal non-negative step.

Slabs are named by mesh kind; in 2D ``"fc"`` is dense along x and ``"cf"``
dense along y.  The all-coarse kind holds the cross points.
"""

from __future__ import annotations

import math
import time
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import CubicSpline

from . import fdm, linsolve, mesh
from .errors import DimensionMismatch, SkeletonNotHollow, ZeroNormSolution
from .mesh import HOLES, MeshConfig
from .problems import error_norms

NORM_FLOOR = 1e-300
HOLLOW_TOL = 1e-14


def _rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def as_grid(config: MeshConfig, kind: str, v: np.ndarray) -> np.ndarray:
    return np.asarray(v).reshape(mesh.shape(config, kind), order="F")


def flat(g: np.ndarray) -> np.ndarray:
    return g.ravel(order="F")


def _project(config, source, target, v):
    return mesh.build_projector(config, source, target).apply(v)


def _lift(config, source, v):
    """Scatter a vector on ``source`` into the fine vector (zeros elsewhere)."""
    return mesh.build_projector(config, config.fine_kind, source).scatter(v)


# ---------------------------------------------------------------------------
# Discretization bundle


@dataclass
class Discretization:
    """Operators, right-hand sides and factorizations for one problem/mesh pair."""

    config: MeshConfig
    problem: fdm.ProblemSpec
    A: dict[str, sp.csr_matrix]
    b: dict[str, np.ndarray]
    factors: dict[str, linsolve.Factorization]
    holes: linsolve.HoleSolver
    skeleton_rows: np.ndarray
    workers: int = 0

    @classmethod
    def build(cls, config: MeshConfig, problem: fdm.ProblemSpec, workers: int | None = None):
        workers = linsolve.env_workers() if workers is None else workers
        kinds = [config.fine_kind, *config.slab_kinds(), config.coarse_kind]
        A = {k: fdm.assemble_operator(config, k, problem) for k in kinds}
        b = {k: fdm.assemble_rhs(config, k, problem) for k in kinds}
        factors = {k: linsolve.factor(A[k]) for k in kinds[1:]}
        holes = linsolve.HoleSolver(A[config.fine_kind], mesh.hole_blocks(config))
        rows = np.flatnonzero(mesh.skeleton_mask(config))
        return cls(config, problem, A, b, factors, holes, rows, workers)

    @property
    def A_ff(self) -> sp.csr_matrix:
        return self.A[self.config.fine_kind]

    @property
    def b_ff(self) -> np.ndarray:
        return self.b[self.config.fine_kind]

    def full_bundle(self) -> dict[str, np.ndarray]:
        return dict(self.b)


# ---------------------------------------------------------------------------
# Skeleton construction (2D)


@dataclass
class SkeletonInputs:
    """Slab solutions (by kind) and the optional coarse solution."""

    slabs: dict[str, np.ndarray]
    u_cc: np.ndarray | None = None
    normalized: bool = False

    def __post_init__(self):
        if (self.u_cc is None) != self.normalized:
            raise ValueError("u_cc must be given exactly when the slabs are not normalized")

    @property
    def u_fc(self):
        return self.slabs["fc"]

    @property
    def u_cf(self):
        return self.slabs["cf"]


def richardson_extrapolate(u1_cc, u2_cc, u_cc) -> np.ndarray:
    """Cross points ``u1 + u2 - u_cc``.

    The slab errors are ``Cx h^2 + Cy H^2`` and ``Cx H^2 + Cy h^2``, the coarse
    error ``(Cx + Cy) H^2``; this is the combination that cancels both
    coarse-step terms.
    """
    u1_cc, u2_cc, u_cc = (np.asarray(v, dtype=float) for v in (u1_cc, u2_cc, u_cc))
    if not (u1_cc.shape == u2_cc.shape == u_cc.shape):
        raise DimensionMismatch("extrapolation inputs must live on the same coarse mesh")
    return u1_cc + u2_cc - u_cc


def choose_cross_points(inputs: SkeletonInputs, config: MeshConfig, rng=0) -> np.ndarray:
    """Pick one slab's coarse projection at random (error mode, no extrapolation)."""
    cc = config.coarse_kind
    choice = ("fc", "cf")[_rng(rng).integers(2)]
    return _project(config, choice, cc, inputs.slabs[choice])


def spline_values(values: np.ndarray, axis: int, config: MeshConfig) -> np.ndarray:
    """Cubic spline along ``axis`` from coarse knots to every fine node.

    Knots are the coarse coordinates plus both domain ends, where the value
    is pinned to 0; natural end conditions.  Knot values are copied through
    exactly.
    """
    n, h = config.factors[axis], config.fine_steps[axis]
    nc, nf = config.coarse_counts[axis], config.fine_counts[axis]
    knots = np.arange(nc + 2) * n * h
    knots[-1] = 1.0
    pad = [(0, 0)] * values.ndim
    pad[axis] = (1, 1)
    spline = CubicSpline(knots, np.pad(values, pad), axis=axis, bc_type="natural")
    out = spline(np.arange(1, nf + 1) * h)
    at_knots = [slice(None)] * values.ndim
    at_knots[axis] = slice(n - 1, nc * n, n)
    out[tuple(at_knots)] = values
    return out


def spline_correct(u_aniso, e_cc, dense_axis: int, config: MeshConfig) -> np.ndarray:
    """Add the spline interpolant of the cross-point error to a 2D slab solution."""
    kind = "".join("f" if a == dense_axis else "c" for a in range(config.dim))
    u = np.asarray(u_aniso, dtype=float)
    if len(u) != mesh.point_count(config, kind) or len(e_cc) != mesh.point_count(config, config.coarse_kind):
        raise DimensionMismatch(f"inputs do not match meshes {kind!r} and the coarse mesh")
    e = as_grid(config, config.coarse_kind, e_cc)
    return u + flat(spline_values(e, dense_axis, config))


def build_skeleton(inputs: SkeletonInputs, config: MeshConfig, rng=0) -> np.ndarray:
    """Merge the two slab solutions into a fine vector that is zero on the holes."""
    cc = config.coarse_kind
    p1 = _project(config, "fc", cc, inputs.u_fc)
    p2 = _project(config, "cf", cc, inputs.u_cf)
    if inputs.u_cc is not None:
        u_hat = richardson_extrapolate(p1, p2, inputs.u_cc)
    else:
        u_hat = choose_cross_points(inputs, config, rng)
    u_fc = spline_correct(inputs.u_fc, u_hat - p1, 0, config)
    u_cf = spline_correct(inputs.u_cf, u_hat - p2, 1, config)
    return (
        _lift(config, "fc", u_fc)
        + _lift(config, "cf", u_cf)
        - _lift(config, cc, _project(config, "cf", cc, u_cf))
    )


# ---------------------------------------------------------------------------
# Skeleton construction (3D)


def _line_kind(slab: str, axis: int) -> str:
    return slab[:axis] + "c" + slab[axis + 1:]


def merge_3d(slabs: dict[str, np.ndarray], u_ccc: np.ndarray | None, config: MeshConfig, rng=0) -> np.ndarray:
    """Merge the three dense-in-two slab solutions into a 3D skeleton.

    Triple points use ``(sum of slabs - u_ccc) / 2``, which cancels every
    coarse-step error term; without ``u_ccc`` one slab is chosen at random.
    Each pairwise line takes the mean of its two slabs after removing the
    spline of their offsets from the triple points (a random one of the two in
    error mode).  Slabs are then corrected by a Boolean-sum tensor spline so
    they agree with the lines, and merged by inclusion-exclusion.
    """
    if config.dim != 3:
        raise DimensionMismatch("merge_3d needs a 3D config")
    rng = _rng(rng)
    ccc = config.coarse_kind
    kinds = config.slab_kinds()
    for k in kinds:
        if len(slabs[k]) != mesh.point_count(config, k):
            raise DimensionMismatch(f"slab {k!r} has the wrong length")
    q = {k: _project(config, k, ccc, slabs[k]) for k in kinds}
    if u_ccc is not None:
        u_hat = (q[kinds[0]] + q[kinds[1]] + q[kinds[2]] - u_ccc) / 2.0
    else:
        u_hat = q[kinds[rng.integers(3)]]
    u_hat_grid = as_grid(config, ccc, u_hat)

    lines: dict[str, np.ndarray] = {}
    for dense in range(3):
        line = "".join("f" if a == dense else "c" for a in range(3))
        owners = [k for k in kinds if k[dense] == "f"]
        if u_ccc is None:
            owners = [owners[rng.integers(2)]]
        candidates = []
        for s in owners:
            v = as_grid(config, line, _project(config, s, line, slabs[s]))
            offset = as_grid(config, ccc, q[s]) - u_hat_grid
            candidates.append(v - spline_values(offset, dense, config))
        lines[line] = sum(candidates) / len(candidates)

    corrected = {}
    for s in kinds:
        a, b = (ax for ax in range(3) if s[ax] == "f")
        line_a, line_b = _line_kind(s, a), _line_kind(s, b)
        # line_a is coarse along a, so its mismatch is interpolated along a
        E_la = lines[line_a] - as_grid(config, line_a, _project(config, s, line_a, slabs[s]))
        E_lb = lines[line_b] - as_grid(config, line_b, _project(config, s, line_b, slabs[s]))
        E_ccc = u_hat_grid - as_grid(config, ccc, q[s])
        G_a = spline_values(E_la, a, config)
        G_b = spline_values(E_lb, b, config)
        G_ab = spline_values(spline_values(E_ccc, a, config), b, config)
        corrected[s] = slabs[s] + flat(G_a + G_b - G_ab)

    out = sum(_lift(config, s, corrected[s]) for s in kinds)
    out -= sum(_lift(config, line, flat(v)) for line, v in lines.items())
    out += _lift(config, ccc, u_hat)
    return out


def skeleton_support(config: MeshConfig) -> np.ndarray:
    """Fine positions covered by at least one slab."""
    covered = np.zeros(mesh.point_count(config, config.fine_kind), dtype=bool)
    for s in config.slab_kinds():
        covered[mesh.build_projector(config, config.fine_kind, s).index_map] = True
    return covered


# ---------------------------------------------------------------------------
# Filler, initial guess, scaling, outer loop


def fill_holes(skeleton, A_ff, b_ff, config: MeshConfig, hole_solver: linsolve.HoleSolver | None = None,
               workers: int | None = None) -> np.ndarray:
    """Use the skeleton as Dirichlet data and solve every hole independently."""
    P = mesh.build_projector(config, config.fine_kind, HOLES)
    skeleton = np.asarray(skeleton, dtype=float)
    inside = P.apply(skeleton)
    if inside.size and np.max(np.abs(inside)) > HOLLOW_TOL:
        raise SkeletonNotHollow(f"skeleton has value {np.max(np.abs(inside)):.3e} inside a hole")
    if hole_solver is None:
        hole_solver = linsolve.HoleSolver(A_ff, mesh.hole_blocks(config))
    c = -P.apply(A_ff @ skeleton)
    v = hole_solver.solve(P.apply(b_ff) + c, workers)
    return skeleton + P.scatter(v)


def _solve_all(disc: Discretization, rhs: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    kinds = list(rhs)
    if disc.workers and len(kinds) > 1:
        with ThreadPoolExecutor(max_workers=disc.workers) as pool:
            sols = list(pool.map(lambda k: linsolve.solve(disc.factors[k], rhs[k]), kinds))
    else:
        sols = [linsolve.solve(disc.factors[k], rhs[k]) for k in kinds]
    return dict(zip(kinds, sols))


def initial_guess(disc: Discretization, rhs_bundle: dict[str, np.ndarray], rng=0) -> np.ndarray:
    """Slab solves, skeleton merge and hole filling.

    ``rhs_bundle`` maps mesh kinds to right-hand sides: the fine kind and every
    slab are required.  Without the coarse kind the slab solutions are
    normalized to unit 2-norm and the cross points are chosen at random
    instead of extrapolated.
    """
    config = disc.config
    slab_kinds = config.slab_kinds()
    cc = config.coarse_kind
    for k, v in rhs_bundle.items():
        if len(v) != mesh.point_count(config, k):
            raise DimensionMismatch(f"rhs for {k!r} has length {len(v)}")
    wanted = slab_kinds + ([cc] if cc in rhs_bundle else [])
    sols = _solve_all(disc, {k: rhs_bundle[k] for k in wanted})
    u_cc = sols.pop(cc, None)
    if u_cc is None:
        for k in slab_kinds:
            norm = np.linalg.norm(sols[k])
            if norm <= NORM_FLOOR:
                raise ZeroNormSolution(f"slab {k!r} solution has norm {norm:.3e}")
            sols[k] = sols[k] / norm
    if config.dim == 2:
        skeleton = build_skeleton(SkeletonInputs(sols, u_cc, normalized=u_cc is None), config, rng)
    else:
        skeleton = merge_3d(sols, u_cc, config, rng)
    return fill_holes(skeleton, disc.A_ff, rhs_bundle[config.fine_kind], config, disc.holes, disc.workers)


def optimal_scaling(r, A_ff, e_tilde, subsample: float | None = None, rng=0,
                    rows: np.ndarray | None = None) -> float:
    """Non-negative ``s`` minimizing ``||r - s A e||_2``.

    With ``subsample`` in (0, 1], the inner products use a random subset of
    ``rows`` (all rows by default) of that relative size.
    """
    r = np.asarray(r, dtype=float)
    e_tilde = np.asarray(e_tilde, dtype=float)
    if A_ff.shape != (len(r), len(e_tilde)):
        raise DimensionMismatch(f"A is {A_ff.shape}, r has {len(r)}, e has {len(e_tilde)}")
    if subsample is not None:
        pool = np.arange(len(r)) if rows is None else np.asarray(rows)
        size = max(1, math.ceil(subsample * len(pool)))
        sel = np.sort(_rng(rng).choice(pool, size=min(size, len(pool)), replace=False))
        Ae = A_ff[sel] @ e_tilde
        r = r[sel]
    else:
        Ae = A_ff @ e_tilde
    denom = float(Ae @ Ae)
    if denom == 0.0:
        return 0.0
    return max(0.0, float(r @ Ae) / denom)


@dataclass
class IterationOptions:
    tol: float = 1e-12
    max_iter: int = 20
    stagnation_window: int = 3
    stagnation_ratio: float = 0.99
    subsample: float | None = None
    rng_seed: int = 0
    workers: int | None = None
    timing: bool = True


@dataclass
class HistoryRow:
    k: int
    res_l2: float
    res_inf: float
    err_max: float
    err_l2: float
    s_hat: float
    wall_ms: float


@dataclass
class IterationState:
    k: int
    u: np.ndarray
    r: np.ndarray
    s_hat: float = math.nan
    history: list[HistoryRow] = field(default_factory=list)
    stop_reason: str = ""


def _stagnated(history: list[HistoryRow], window: int, ratio: float) -> bool:
    if window <= 0 or len(history) <= window:
        return False
    recent = [history[i].res_l2 / history[i - 1].res_l2 if history[i - 1].res_l2 else 1.0
              for i in range(len(history) - window, len(history))]
    return min(recent) >= ratio


def asdsm_iterate(problem: fdm.ProblemSpec, config: MeshConfig, options: IterationOptions | None = None,
                  callback: Callable[[IterationState], None] | None = None,
                  disc: Discretization | None = None) -> IterationState:
    """Initial guess followed by scaled error corrections until a stop rule fires.

    ``callback`` sees the state after the initial guess and after every step.
    """
    opts = options or IterationOptions()
    disc = disc or Discretization.build(config, problem, opts.workers)
    rng = np.random.default_rng(opts.rng_seed)
    A, b = disc.A_ff, disc.b_ff
    b_norm = np.linalg.norm(b)
    slabs = config.slab_kinds()
    zero_ff = np.zeros_like(b)

    def row(state, elapsed):
        if problem.exact is not None:
            err_max, err_l2 = error_norms(state.u, problem, config)
        else:
            err_max = err_l2 = math.nan
        wall = elapsed * 1e3 if opts.timing else 0.0
        return HistoryRow(state.k, float(np.linalg.norm(state.r)), float(np.max(np.abs(state.r))),
                          err_max, err_l2, state.s_hat, wall)

    t0 = time.perf_counter()
    u = initial_guess(disc, disc.full_bundle(), rng)
    state = IterationState(0, u, fdm.residual(A, b, u))
    state.history.append(row(state, time.perf_counter() - t0))
    if callback:
        callback(state)

    while True:
        res = state.history[-1].res_l2
        if res <= opts.tol * b_norm:
            state.stop_reason = "converged"
            break
        if state.k >= opts.max_iter:
            state.stop_reason = "max_iter"
            break
        if _stagnated(state.history, opts.stagnation_window, opts.stagnation_ratio):
            state.stop_reason = "stagnation"
            break
        t0 = time.perf_counter()
        bundle = {config.fine_kind: zero_ff}
        for s in slabs:
            bundle[s] = _project(config, config.fine_kind, s, state.r)
        try:
            e = initial_guess(disc, bundle, rng)
            s_hat = optimal_scaling(state.r, A, e, opts.subsample, rng, disc.skeleton_rows)
        except ZeroNormSolution:
            e, s_hat = zero_ff, 0.0
        u_new = state.u + s_hat * e
        r_new = fdm.residual(A, b, u_new)
        if np.linalg.norm(r_new) > res * (1 + 1e-12):
            s_hat, u_new, r_new = 0.0, state.u, state.r
        state.k += 1
        state.u, state.r, state.s_hat = u_new, r_new, s_hat
        state.history.append(row(state, time.perf_counter() - t0))
        if callback:
            callback(state)
    return state
