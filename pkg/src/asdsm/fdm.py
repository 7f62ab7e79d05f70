"""Second-order centred finite differences on the meshes of :mod:`asdsm.mesh`.

Operators are scipy CSR matrices (sorted column indices, no duplicates).
Grid functions are plain 1-D float arrays in the mesh vector order.
Dirichlet data is eliminated: only interior points are unknowns and the
known boundary values are moved into the right-hand side.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.sparse as sp

from . import mesh
from .errors import DimensionMismatch, InvalidKind
from .mesh import HOLES, MeshConfig

Field = Callable[..., "np.ndarray | float"]


@dataclass(frozen=True)
class ProblemSpec:
    """Coefficients and data of a (possibly time-dependent) advection-diffusion problem.

    All callables take one coordinate array per axis, ``f(x, y)``,
    ``f(x, y, z)`` or ``f(x, t)``, and may return a scalar.  ``alpha`` and
    ``beta`` have one entry per *spatial* axis.  For time-dependent problems
    ``boundary`` also supplies the initial data at ``t = 0``.
    """

    dim: int
    alpha: tuple[Field, ...]
    beta: tuple[Field, ...]
    source: Field
    boundary: Field
    exact: Field | None = None
    time_dependent: bool = False
    name: str = "custom"

    @property
    def space_dim(self) -> int:
        return self.dim - 1 if self.time_dependent else self.dim

    def __post_init__(self):
        if len(self.alpha) != self.space_dim or len(self.beta) != self.space_dim:
            raise DimensionMismatch(
                f"need {self.space_dim} alpha/beta entries, got {len(self.alpha)}/{len(self.beta)}"
            )


def sample(f: Field, points: np.ndarray) -> np.ndarray:
    """Evaluate ``f`` at an ``(n, d)`` point array, broadcasting scalar results."""
    values = np.asarray(f(*points.T), dtype=float)
    return np.array(np.broadcast_to(values, (points.shape[0],)))


def stencil_matrices(N: int) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Tridiagonal ``L = tridiag(-1, 2, -1)`` and ``D = tridiag(-1, 0, 1)``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    one = np.ones(N - 1)
    L = sp.diags([-one, 2.0 * np.ones(N), -one], [-1, 0, 1], shape=(N, N), format="csr")
    D = sp.diags([-one, one], [-1, 1], shape=(N, N), format="csr")
    return L, D


def backward_matrix(N: int) -> sp.csr_matrix:
    """Two-point backward difference ``(u_i - u_{i-1})`` without the step."""
    return sp.diags([-np.ones(N - 1), np.ones(N)], [-1, 0], shape=(N, N), format="csr")


def _along_axis(M: sp.spmatrix, axis: int, grid_shape: Sequence[int]) -> sp.csr_matrix:
    """Lift a 1-D operator on ``axis`` to the tensor grid (axis 0 fastest)."""
    factors = [
        M if a == axis else sp.identity(n, format="csr")
        for a, n in reversed(list(enumerate(grid_shape)))
    ]
    return reduce(lambda A, B: sp.kron(A, B, format="csr"), factors)


def _tidy(A: sp.spmatrix) -> sp.csr_matrix:
    A = sp.csr_matrix(A)
    A.sum_duplicates()
    A.eliminate_zeros()
    A.sort_indices()
    return A


def assemble_on_grid(
    grid_shape: Sequence[int],
    grid_steps: Sequence[float],
    points: np.ndarray,
    problem: ProblemSpec,
) -> sp.csr_matrix:
    """Operator on a tensor grid given explicitly by its shape, steps and points.

    Each row samples the coefficients at its own point (non-divergence form).
    """
    n = int(np.prod(grid_shape))
    A = sp.csr_matrix((n, n))
    for a in range(problem.dim):
        N, h = grid_shape[a], grid_steps[a]
        if problem.time_dependent and a == problem.dim - 1:
            A = A + _along_axis(backward_matrix(N) * (1.0 / h), a, grid_shape)
            continue
        L, D = stencil_matrices(N)
        alpha = sample(problem.alpha[a], points)
        beta = sample(problem.beta[a], points)
        A = A + sp.diags(alpha) @ _along_axis(L * (1.0 / h**2), a, grid_shape)
        A = A + sp.diags(beta) @ _along_axis(D * (1.0 / (2.0 * h)), a, grid_shape)
    return _tidy(A)


def _check(config: MeshConfig, kind: str, problem: ProblemSpec):
    if kind == HOLES:
        raise InvalidKind("the holes mesh is not a tensor grid; use assemble_hole_operator")
    mesh.check_kind(config, kind)
    if problem.dim != config.dim or problem.time_dependent != config.time_axis:
        raise DimensionMismatch("problem and mesh disagree on dimension or time axis")


def assemble_operator(config: MeshConfig, kind: str, problem: ProblemSpec) -> sp.csr_matrix:
    _check(config, kind, problem)
    return assemble_on_grid(
        mesh.shape(config, kind),
        mesh.steps(config, kind),
        mesh.coordinates(config, kind),
        problem,
    )


def assemble_hole_operator(config: MeshConfig, hole: Sequence[int], problem: ProblemSpec) -> sp.csr_matrix:
    """Operator of one hole treated as a standalone grid with fine steps."""
    if problem.dim != config.dim:
        raise DimensionMismatch("problem and mesh disagree on dimension")
    local = [np.arange(1, n) for n in config.factors]
    grids = np.meshgrid(*local, indexing="ij")
    idx = np.stack(
        [(g.ravel(order="F") + hole[a] * config.factors[a]) for a, g in enumerate(grids)], axis=1
    )
    points = idx * np.asarray(config.fine_steps)
    return assemble_on_grid([n - 1 for n in config.factors], config.fine_steps, points, problem)


def assemble_rhs(config: MeshConfig, kind: str, problem: ProblemSpec) -> np.ndarray:
    """Source samples plus the eliminated Dirichlet (and initial) data."""
    _check(config, kind, problem)
    points = mesh.coordinates(config, kind)
    grid_shape = mesh.shape(config, kind)
    grid_steps = mesh.steps(config, kind)
    b = sample(problem.source, points)
    local = np.stack(
        [g.ravel(order="F") for g in np.meshgrid(*[np.arange(n) for n in grid_shape], indexing="ij")],
        axis=1,
    )
    for a in range(config.dim):
        h = grid_steps[a]
        first = local[:, a] == 0
        last = local[:, a] == grid_shape[a] - 1
        lower = points[first].copy()
        lower[:, a] = 0.0
        if problem.time_dependent and a == config.dim - 1:
            b[first] += sample(problem.boundary, lower) / h
            continue
        upper = points[last].copy()
        upper[:, a] = 1.0
        alpha, beta = problem.alpha[a], problem.beta[a]
        b[first] += (sample(alpha, points[first]) / h**2 + sample(beta, points[first]) / (2 * h)) * sample(
            problem.boundary, lower
        )
        b[last] += (sample(alpha, points[last]) / h**2 - sample(beta, points[last]) / (2 * h)) * sample(
            problem.boundary, upper
        )
    return b


def residual(A: sp.spmatrix, b: np.ndarray, u: np.ndarray) -> np.ndarray:
    if A.shape[1] != len(u) or A.shape[0] != len(b):
        raise DimensionMismatch(f"A is {A.shape}, b has {len(b)}, u has {len(u)}")
    return b - A @ u
