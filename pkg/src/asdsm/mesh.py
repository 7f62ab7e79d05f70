"""Fine, anisotropic, coarse and hole meshes on the unit cube, and the
selection projectors between them.

A mesh kind is a string with one letter per axis: ``"f"`` selects the fine
step on that axis, ``"c"`` the coarse one.  ``"fc"`` is the 2D mesh dense
along x and coarse along y; ``"cff"`` is the 3D slab coarse along x.  The
special kind ``"holes"`` is the union of all hole blocks, stored block by
block.

Every point is addressed by its fine multi-index ``(i_0, ..., i_{d-1})`` with
``1 <= i_a <= N_f[a]``; coarse points are the fine indices that are multiples
of the refinement factor.  Vectors are ordered lexicographically with axis 0
running fastest.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import (
    DegenerateError,
    DimensionMismatch,
    DivisibilityError,
    IndexOutOfRange,
    InvalidKind,
    NotASubmesh,
)

HOLES = "holes"
AXIS_NAMES = "XYZ"


@dataclass(frozen=True)
class MeshConfig:
    """Per-axis fine/coarse counts on ``[0, 1]^d``.

    ``time_axis`` marks the last axis as time (backward stencil, initial
    data at t=0 instead of a terminal condition).
    """

    fine_counts: tuple[int, ...]
    coarse_counts: tuple[int, ...]
    time_axis: bool = False
    factors: tuple[int, ...] = field(init=False)
    fine_steps: tuple[float, ...] = field(init=False)
    coarse_steps: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        fine = tuple(int(n) for n in self.fine_counts)
        coarse = tuple(int(n) for n in self.coarse_counts)
        if len(fine) != len(coarse):
            raise DimensionMismatch(f"fine counts {fine} and coarse counts {coarse} differ in length")
        if len(fine) not in (2, 3):
            raise DimensionMismatch(f"only 2 or 3 axes are supported, got {len(fine)}")
        if min(fine + coarse) < 1:
            raise DegenerateError("all mesh counts must be >= 1")
        factors = []
        for a, (nf, nc) in enumerate(zip(fine, coarse)):
            if (nf + 1) % (nc + 1):
                raise DivisibilityError(
                    f"axis {a}: fine+1={nf + 1} is not a multiple of coarse+1={nc + 1}"
                )
            factors.append((nf + 1) // (nc + 1))
        if min(factors) < 2:
            raise DegenerateError(f"refinement factors {tuple(factors)} must all be >= 2")
        object.__setattr__(self, "fine_counts", fine)
        object.__setattr__(self, "coarse_counts", coarse)
        object.__setattr__(self, "factors", tuple(factors))
        object.__setattr__(self, "fine_steps", tuple(1.0 / (nf + 1) for nf in fine))
        object.__setattr__(self, "coarse_steps", tuple(1.0 / (nc + 1) for nc in coarse))

    @property
    def dim(self) -> int:
        return len(self.fine_counts)

    @property
    def fine_kind(self) -> str:
        return "f" * self.dim

    @property
    def coarse_kind(self) -> str:
        return "c" * self.dim

    def slab_kinds(self) -> list[str]:
        """Kinds with exactly one coarse axis, ordered by that axis.

        In 2D these are ``["cf", "fc"]``; note ``"fc"`` (dense along x) has
        its coarse axis at position 1.
        """
        return ["f" * a + "c" + "f" * (self.dim - a - 1) for a in range(self.dim)]

    def __str__(self):
        return f"MeshConfig(fine={self.fine_counts}, coarse={self.coarse_counts}, factors={self.factors})"


def mesh_config_new(dim, fine_counts, coarse_counts, time_axis=False) -> MeshConfig:
    if len(fine_counts) != dim or len(coarse_counts) != dim:
        raise DimensionMismatch(f"expected {dim} counts per argument")
    return MeshConfig(tuple(fine_counts), tuple(coarse_counts), time_axis)


def check_kind(config: MeshConfig, kind: str, allow_holes: bool = True) -> str:
    if kind == HOLES:
        if not allow_holes:
            raise InvalidKind("operation is undefined on the holes mesh")
        return kind
    if len(kind) != config.dim or set(kind) - {"f", "c"}:
        raise InvalidKind(f"{kind!r} is not a mesh kind for a {config.dim}D config")
    return kind


def shape(config: MeshConfig, kind: str) -> tuple[int, ...]:
    """Per-axis point counts of a tensor kind."""
    check_kind(config, kind, allow_holes=False)
    return tuple(
        nf if k == "f" else nc
        for k, nf, nc in zip(kind, config.fine_counts, config.coarse_counts)
    )


def steps(config: MeshConfig, kind: str) -> tuple[float, ...]:
    check_kind(config, kind, allow_holes=False)
    return tuple(
        h if k == "f" else H for k, h, H in zip(kind, config.fine_steps, config.coarse_steps)
    )


def point_count(config: MeshConfig, kind: str) -> int:
    check_kind(config, kind)
    if kind == HOLES:
        return int(np.prod([nc + 1 for nc in config.coarse_counts])) * hole_size(config)
    return int(np.prod(shape(config, kind)))


def hole_size(config: MeshConfig) -> int:
    return int(np.prod([n - 1 for n in config.factors]))


def axis_fine_indices(config: MeshConfig, kind: str, axis: int) -> np.ndarray:
    """Fine indices of the points of a tensor kind along one axis."""
    if kind[axis] == "f":
        return np.arange(1, config.fine_counts[axis] + 1)
    return config.factors[axis] * np.arange(1, config.coarse_counts[axis] + 1)


@lru_cache(maxsize=64)
def _fine_indices(config: MeshConfig, kind: str) -> np.ndarray:
    if kind == HOLES:
        local = [np.arange(1, n) for n in config.factors]
        holes = [np.arange(nc + 1) for nc in config.coarse_counts]
        grids = np.meshgrid(*local, *holes, indexing="ij")
        d = config.dim
        cols = [
            (grids[d + a] * config.factors[a] + grids[a]).ravel(order="F") for a in range(d)
        ]
    else:
        axes = [axis_fine_indices(config, kind, a) for a in range(config.dim)]
        grids = np.meshgrid(*axes, indexing="ij")
        cols = [g.ravel(order="F") for g in grids]
    out = np.stack(cols, axis=1)
    out.flags.writeable = False
    return out


def fine_indices(config: MeshConfig, kind: str) -> np.ndarray:
    """``(count, dim)`` array of fine multi-indices in vector order."""
    check_kind(config, kind)
    return _fine_indices(config, kind)


def coordinates(config: MeshConfig, kind: str) -> np.ndarray:
    """Physical coordinates ``fine_index * h`` of every point, in vector order.

    Coarse points are computed from fine indices too, so co-located points on
    different kinds have bit-identical coordinates.
    """
    return fine_indices(config, kind) * np.asarray(config.fine_steps)


def axis_coordinates(config: MeshConfig, kind: str, axis: int) -> np.ndarray:
    return axis_fine_indices(config, kind, axis) * config.fine_steps[axis]


def _positions_in(config: MeshConfig, kind: str, idx: np.ndarray) -> np.ndarray:
    """Vector positions on a tensor ``kind`` of fine multi-indices ``idx``."""
    pos = np.zeros(len(idx), dtype=np.int64)
    stride = 1
    for a, k in enumerate(kind):
        if k == "f":
            p = idx[:, a] - 1
            n = config.fine_counts[a]
        else:
            p = idx[:, a] // config.factors[a] - 1
            n = config.coarse_counts[a]
        pos += p * stride
        stride *= n
    return pos


@dataclass(frozen=True)
class PointClass:
    """Role of one fine point in the skeleton/holes partition.

    ``dense_axes`` lists the axes whose index is *not* a multiple of the
    factor; the point lies on every anisotropic mesh that is fine along those
    axes.  Cross points have no dense axes, holes have all of them.
    """

    category: str
    dense_axes: tuple[int, ...]
    hole: tuple[int, ...] | None = None

    @property
    def name(self) -> str:
        if self.category == "cross":
            return "Cross"
        if self.category == "hole":
            return "Hole"
        return "SkeletonDense" + "".join(AXIS_NAMES[a] for a in self.dense_axes)


def classify(config: MeshConfig, fine_multi_index) -> PointClass:
    idx = tuple(int(i) for i in fine_multi_index)
    if len(idx) != config.dim:
        raise IndexOutOfRange(f"expected {config.dim} indices, got {idx}")
    for a, (i, n) in enumerate(zip(idx, config.fine_counts)):
        if not 1 <= i <= n:
            raise IndexOutOfRange(f"index {i} on axis {a} outside 1..{n}")
    dense = tuple(a for a, i in enumerate(idx) if i % config.factors[a])
    if not dense:
        return PointClass("cross", ())
    if len(dense) == config.dim:
        hole = tuple(i // n for i, n in zip(idx, config.factors))
        return PointClass("hole", dense, hole)
    return PointClass("skeleton", dense)


def multiple_counts(config: MeshConfig) -> np.ndarray:
    """Per fine point, the number of axes whose index is a factor multiple.

    0 marks holes, ``dim`` marks cross points, anything between is skeleton.
    """
    idx = fine_indices(config, config.fine_kind)
    return sum((idx[:, a] % config.factors[a] == 0).astype(np.int64) for a in range(config.dim))


def skeleton_mask(config: MeshConfig) -> np.ndarray:
    """Boolean mask over the fine vector: True on skeleton and cross points."""
    return multiple_counts(config) > 0


@dataclass(frozen=True)
class Projector:
    """Selection map from ``source_kind`` vectors onto ``target_kind``.

    ``index_map[m]`` is the source position holding target point ``m``.
    ``apply`` is the 0/1 matrix product, ``scatter`` its transpose.
    """

    source_kind: str
    target_kind: str
    index_map: np.ndarray
    source_size: int

    @property
    def target_size(self) -> int:
        return len(self.index_map)

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        if v.shape[0] != self.source_size:
            raise DimensionMismatch(f"expected length {self.source_size}, got {v.shape[0]}")
        return v[self.index_map]

    def scatter(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w)
        if w.shape[0] != self.target_size:
            raise DimensionMismatch(f"expected length {self.target_size}, got {w.shape[0]}")
        out = np.zeros((self.source_size,) + w.shape[1:], dtype=w.dtype)
        out[self.index_map] = w
        return out

    def matrix(self) -> sp.csr_matrix:
        n = self.target_size
        return sp.csr_matrix(
            (np.ones(n), (np.arange(n), self.index_map)), shape=(n, self.source_size)
        )


def is_submesh(source: str, target: str) -> bool:
    if target == HOLES:
        return source == HOLES or set(source) == {"f"}
    if source == HOLES:
        return False
    return len(source) == len(target) and all(
        t == "c" for s, t in zip(source, target) if s == "c"
    )


@lru_cache(maxsize=128)
def _build_projector(config: MeshConfig, source: str, target: str) -> Projector:
    if not is_submesh(source, target):
        raise NotASubmesh(f"{target!r} is not contained in {source!r}")
    if source == HOLES:
        index_map = np.arange(point_count(config, HOLES))
    else:
        index_map = _positions_in(config, source, fine_indices(config, target))
    index_map.flags.writeable = False
    return Projector(source, target, index_map, point_count(config, source))


def build_projector(config: MeshConfig, source: str, target: str) -> Projector:
    check_kind(config, source)
    check_kind(config, target)
    return _build_projector(config, source, target)


def hole_indices(config: MeshConfig) -> list[tuple[int, ...]]:
    """Hole multi-indices in storage order (axis 0 fastest)."""
    ranges = [range(nc + 1) for nc in config.coarse_counts]
    return [tuple(reversed(t)) for t in itertools.product(*reversed(ranges))]


def hole_blocks(config: MeshConfig) -> list[tuple[tuple[int, ...], np.ndarray]]:
    """Each hole's multi-index with the fine-vector positions of its points."""
    m = hole_size(config)
    positions = build_projector(config, config.fine_kind, HOLES).index_map
    return [(h, positions[b * m:(b + 1) * m]) for b, h in enumerate(hole_indices(config))]


def hole_boundary_complete(config: MeshConfig, skeleton: np.ndarray | None = None) -> bool:
    """True if every outside neighbour of every hole point is boundary data.

    A neighbour qualifies when it lies on the domain boundary or on the
    skeleton; with ``skeleton`` given it must also be a nonzero-capable
    position of that vector (i.e. inside its support mask).
    """
    idx = fine_indices(config, HOLES)
    mask = skeleton_mask(config) if skeleton is None else np.asarray(skeleton, dtype=bool)
    own_hole = idx // np.asarray(config.factors)
    for a in range(config.dim):
        for step in (-1, 1):
            nb = idx.copy()
            nb[:, a] += step
            on_boundary = (nb[:, a] == 0) | (nb[:, a] == config.fine_counts[a] + 1)
            inside = ~on_boundary
            same_hole = np.all(nb // np.asarray(config.factors) == own_hole, axis=1)
            need = inside & ~same_hole
            pos = _positions_in(config, config.fine_kind, nb[need])
            if not np.all(mask[pos]):
                return False
    return True
