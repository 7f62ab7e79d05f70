"""Anisotropic submeshes domain splitting for advection-diffusion problems."""

from .algorithm import (
    Discretization,
    IterationOptions,
    IterationState,
    asdsm_iterate,
    build_skeleton,
    fill_holes,
    initial_guess,
    merge_3d,
    optimal_scaling,
    richardson_extrapolate,
    spline_correct,
)
from .fdm import ProblemSpec, assemble_operator, assemble_rhs, residual, stencil_matrices
from .linsolve import factor, oracle_solve_fine, solve, solve_holes
from .mesh import HOLES, MeshConfig, build_projector, classify, hole_blocks, mesh_config_new, point_count
from .problems import ExampleId, error_norms, make_problem, sine_wave_problem

__all__ = [
    "HOLES",
    "Discretization",
    "ExampleId",
    "IterationOptions",
    "IterationState",
    "MeshConfig",
    "ProblemSpec",
    "asdsm_iterate",
    "assemble_operator",
    "assemble_rhs",
    "build_projector",
    "build_skeleton",
    "classify",
    "error_norms",
    "factor",
    "fill_holes",
    "hole_blocks",
    "initial_guess",
    "make_problem",
    "merge_3d",
    "mesh_config_new",
    "optimal_scaling",
    "oracle_solve_fine",
    "point_count",
    "residual",
    "richardson_extrapolate",
    "sine_wave_problem",
    "solve",
    "solve_holes",
    "spline_correct",
    "stencil_matrices",
]
