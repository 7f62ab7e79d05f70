import numpy as np
import pytest

from asdsm import fdm, mesh
from asdsm.errors import DimensionMismatch, NoExactSolution, UnknownExample
from asdsm.mesh import MeshConfig
from asdsm.problems import ExampleId, error_norms, make_problem, sine_wave_problem

ALL = [(1, 1), (1, 2), (2, 1), (2, 2), (3, 1), (3, 2), (4, 1), (4, 2)]


def fd_source(problem, p, h=1e-4):
    """Evaluate the PDE operator on the exact solution by central differences."""
    u = problem.exact
    total = 0.0
    for a in range(problem.dim):
        e = np.zeros(problem.dim)
        e[a] = h
        up, um, u0 = u(*(p + e)), u(*(p - e)), u(*p)
        first = (up - um) / (2 * h)
        if problem.time_dependent and a == problem.dim - 1:
            total += first
            continue
        total += -problem.alpha[a](*p) * (up - 2 * u0 + um) / h**2 + problem.beta[a](*p) * first
    return total


@pytest.mark.parametrize("example", ALL)
def test_source_matches_differentiated_exact_solution(example):
    problem = make_problem(example)
    pts = np.random.default_rng(7).uniform(0.05, 0.95, size=(100, problem.dim))
    for p in pts:
        s = problem.source(*p)
        assert abs(fd_source(problem, p) - s) <= 1e-5 * max(1.0, abs(s))


@pytest.mark.parametrize("example", ALL)
def test_boundary_is_exact_solution(example):
    problem = make_problem(example)
    pts = np.random.default_rng(1).uniform(0, 1, size=(20, problem.dim))
    assert np.array_equal(fdm.sample(problem.boundary, pts), fdm.sample(problem.exact, pts))


def test_example_shapes():
    assert make_problem((3, 1)).time_dependent and make_problem((3, 1)).dim == 2
    assert make_problem(ExampleId(4, 2)).dim == 3
    assert make_problem((1, 2)).name == "example1_setting2"
    with pytest.raises(UnknownExample):
        make_problem((5, 1))


def test_error_norms():
    c = MeshConfig((8, 8), (2, 2))
    p = make_problem((1, 1))
    exact = fdm.sample(p.exact, mesh.coordinates(c, "ff"))
    assert error_norms(exact, p, c) == (0.0, 0.0)
    emax, el2 = error_norms(exact + 0.5, p, c)
    assert emax == pytest.approx(0.5)
    assert el2 == pytest.approx(np.sqrt(64 / 81 * 0.25))
    with pytest.raises(DimensionMismatch):
        error_norms(exact[:-1], p, c)


def test_no_exact_solution():
    p = sine_wave_problem((1, 1), (1, 1), 1)
    from dataclasses import replace
    with pytest.raises(NoExactSolution):
        error_norms(np.zeros(64), replace(p, exact=None), MeshConfig((8, 8), (2, 2)))
