"""Direct sparse solves: anisotropic/coarse systems, per-hole blocks, and the
full fine system used as ground truth in tests.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import fdm, mesh
from .errors import DimensionMismatch, SingularMatrix
from .mesh import MeshConfig

PIVOT_TOL = 1e-14


@dataclass(frozen=True)
class Factorization:
    A: sp.csc_matrix
    lu: spla.SuperLU

    @property
    def size(self) -> int:
        return self.A.shape[0]


def factor(A: sp.spmatrix) -> Factorization:
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"matrix must be square, got {A.shape}")
    A = sp.csc_matrix(A, copy=True)
    norm = spla.norm(A, np.inf) if A.nnz else 0.0
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        raise SingularMatrix(str(exc)) from exc
    pivots = np.abs(lu.U.diagonal())
    if pivots.size and (norm == 0.0 or pivots.min() <= PIVOT_TOL * norm):
        raise SingularMatrix(f"pivot {pivots.min():.3e} below {PIVOT_TOL:g}*||A||_inf")
    return Factorization(A, lu)


def solve(F: Factorization, b: np.ndarray) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    if b.shape[0] != F.size:
        raise DimensionMismatch(f"expected rhs of length {F.size}, got {b.shape[0]}")
    return F.lu.solve(b)


def env_workers() -> int:
    """Worker cap from ``ASDSM_WORKERS`` (0 or unset means serial)."""
    try:
        return max(0, int(os.environ.get("ASDSM_WORKERS", "0")))
    except ValueError:
        return 0


class HoleSolver:
    """Factorizations of every diagonal hole block of ``A_ff``.

    When all blocks are entrywise identical (constant coefficients) a single
    factorization is shared.  Solves are chunked per hole, so the result does
    not depend on the number of workers.
    """

    def __init__(self, A_ff: sp.spmatrix, blocks):
        A_ff = sp.csr_matrix(A_ff)
        self.holes = [h for h, _ in blocks]
        self.positions = [p for _, p in blocks]
        self.block_size = len(self.positions[0]) if blocks else 0
        mats = [A_ff[p][:, p] for p in self.positions]
        self.shared = len(mats) > 1 and all(_same(mats[0], M) for M in mats[1:])
        if self.shared:
            self.factors = [self._factor(0, mats[0])]
        else:
            self.factors = [self._factor(b, M) for b, M in enumerate(mats)]

    def _factor(self, b: int, M) -> Factorization:
        try:
            return factor(M)
        except SingularMatrix as exc:
            hole = self.holes[b]
            raise SingularMatrix(f"hole {hole}: {exc}", hole=hole) from exc

    @property
    def size(self) -> int:
        return self.block_size * len(self.holes)

    def solve(self, rhs: np.ndarray, workers: int | None = None) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape[0] != self.size:
            raise DimensionMismatch(f"expected hole rhs of length {self.size}, got {rhs.shape[0]}")
        m = self.block_size
        blocks = rhs.reshape(len(self.holes), m)
        out = np.empty_like(blocks)
        workers = env_workers() if workers is None else workers

        def run(b):
            F = self.factors[0] if self.shared else self.factors[b]
            out[b] = F.lu.solve(blocks[b])

        if workers and len(self.holes) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                list(pool.map(run, range(len(self.holes))))
        else:
            for b in range(len(self.holes)):
                run(b)
        return out.reshape(-1)


def _same(A, B) -> bool:
    return (
        A.shape == B.shape
        and np.array_equal(A.indptr, B.indptr)
        and np.array_equal(A.indices, B.indices)
        and np.array_equal(A.data, B.data)
    )


def solve_holes(config: MeshConfig, A_ff, rhs_holes, blocks=None, workers: int | None = None) -> np.ndarray:
    """Solve the block-diagonal hole system ``P_holes A_ff P_holes^T v = rhs``."""
    if blocks is None:
        blocks = mesh.hole_blocks(config)
    return HoleSolver(A_ff, blocks).solve(rhs_holes, workers)


def oracle_solve_fine(config: MeshConfig, problem: fdm.ProblemSpec) -> np.ndarray:
    """Direct solve of the full fine system (ground truth for tests and reports)."""
    A = fdm.assemble_operator(config, config.fine_kind, problem)
    b = fdm.assemble_rhs(config, config.fine_kind, problem)
    return solve(factor(A), b)
