"""Manufactured-solution test problems and error reporting.

Every bundled problem has an exact solution of the form
``u = sin(k*pi*(x_1 + ... + x_d))``.  With ``theta`` the phase, substituting
into ``u_t - sum(alpha_a u_aa) + sum(beta_a u_a) = s`` gives

    s = (k pi)^2 sin(theta) * sum(alpha_a) + k pi cos(theta) * (sum(beta_a) [+ 1])

where the ``+ 1`` is the time derivative.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import mesh
from .errors import DimensionMismatch, NoExactSolution, UnknownExample
from .fdm import ProblemSpec, sample
from .mesh import MeshConfig


@dataclass(frozen=True)
class ExampleId:
    example: int
    setting: int

    def __str__(self):
        return f"example {self.example} setting {self.setting}"


def _const(c):
    return lambda *p: c


def sine_wave_problem(alpha, beta, wave: float, time_dependent: bool = False, name: str = "custom") -> ProblemSpec:
    """Problem with exact solution ``sin(wave*pi*sum(coords))``.

    ``alpha``/``beta`` entries may be numbers or callables of the coordinates.
    """
    alpha = tuple(a if callable(a) else _const(float(a)) for a in alpha)
    beta = tuple(b if callable(b) else _const(float(b)) for b in beta)
    k = wave * np.pi
    dim = len(alpha) + (1 if time_dependent else 0)

    def exact(*p):
        return np.sin(k * sum(p))

    def source(*p):
        theta = k * sum(p)
        diffusion = sum(np.asarray(a(*p), dtype=float) for a in alpha)
        drift = sum(np.asarray(b(*p), dtype=float) for b in beta) + (1.0 if time_dependent else 0.0)
        return k**2 * np.sin(theta) * diffusion + k * np.cos(theta) * drift

    return ProblemSpec(
        dim=dim,
        alpha=alpha,
        beta=beta,
        source=source,
        boundary=exact,
        exact=exact,
        time_dependent=time_dependent,
        name=name,
    )


def _example_1_2():
    return sine_wave_problem(
        (lambda x, y: 1 + x**2, lambda x, y: 2 + x * y),
        (lambda x, y: 2 - x, lambda x, y: 1 + y),
        4,
    )


def _example_3_2():
    return sine_wave_problem((lambda x, t: 1 + x**2,), (lambda x, t: 2 - x,), 4, time_dependent=True)


def _example_4_2():
    return sine_wave_problem(
        (lambda x, y, z: 1 + x**2, lambda x, y, z: 2 + x * y, lambda x, y, z: 3 - x * y * z),
        (lambda x, y, z: 2 - x, lambda x, y, z: 1 + y, lambda x, y, z: 2 - x + y * z),
        4,
    )


# Example 2 holds the two toy problems: the smooth steady 2D and space-time cases.
_EXAMPLES = {
    (1, 1): lambda: sine_wave_problem((1, 1), (1, 1), 1),
    (1, 2): _example_1_2,
    (2, 1): lambda: sine_wave_problem((1, 1), (1, 1), 1),
    (2, 2): lambda: sine_wave_problem((1,), (1,), 1, time_dependent=True),
    (3, 1): lambda: sine_wave_problem((1,), (1,), 1, time_dependent=True),
    (3, 2): _example_3_2,
    (4, 1): lambda: sine_wave_problem((1, 1, 1), (1, 1, 1), 1),
    (4, 2): _example_4_2,
}


def make_problem(example_id) -> ProblemSpec:
    if not isinstance(example_id, ExampleId):
        example_id = ExampleId(*example_id)
    key = (example_id.example, example_id.setting)
    if key not in _EXAMPLES:
        raise UnknownExample(f"no {example_id}")
    return replace(_EXAMPLES[key](), name=f"example{key[0]}_setting{key[1]}")


def error_norms(u: np.ndarray, problem: ProblemSpec, config: MeshConfig, kind: str | None = None):
    """Max and h-weighted discrete L2 distance between ``u`` and the exact solution."""
    if problem.exact is None:
        raise NoExactSolution(f"problem {problem.name!r} has no exact solution")
    kind = config.fine_kind if kind is None else kind
    points = mesh.coordinates(config, kind)
    if len(u) != len(points):
        raise DimensionMismatch(f"expected {len(points)} values, got {len(u)}")
    err = np.asarray(u) - sample(problem.exact, points)
    weight = float(np.prod(mesh.steps(config, kind)))
    return float(np.max(np.abs(err))), float(np.sqrt(weight * np.sum(err**2)))
