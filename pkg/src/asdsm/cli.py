"""Command line experiment runner.

    asdsm run --example 1 --setting 1 --nf 99 --nc 9 --out history.csv
    asdsm snapshot --example 2 --setting 1 --nf 99 --nc 9 --at-iter 20 --out r.csv
    asdsm verify all

Settings may also come from a ``key=value`` file given with ``--config``;
command line flags win.  Exit codes: 0 success (stagnation included),
1 failed verification, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from dataclasses import dataclass

import numpy as np

from . import algorithm, verify
from .errors import ASDSMError, MeshError, UnknownExample
from .mesh import MeshConfig
from .problems import ExampleId, make_problem, sine_wave_problem

CSV_HEADER = "k,res_l2,res_inf,err_max,err_l2,s_hat,wall_ms"


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    example: str = "1"
    setting: int = 1
    nf: str = "99"
    nc: str = "9"
    tol: float = 1e-12
    max_iter: int = 20
    subsample: float | None = None
    seed: int = 0
    out: str | None = None
    timing: bool = True
    stagnation_window: int = 3
    stagnation_ratio: float = 0.99
    at_iter: int | None = None
    # custom problems: exact solution sin(wave*pi*sum(coords))
    alpha: str | None = None
    beta: str | None = None
    wave: float = 1.0
    time: bool = False

    def problem(self):
        if self.example == "custom":
            if self.alpha is None or self.beta is None:
                raise ConfigError("custom problems need --alpha and --beta")
            alpha = [float(a) for a in self.alpha.split(",")]
            beta = [float(b) for b in self.beta.split(",")]
            return sine_wave_problem(alpha, beta, self.wave, time_dependent=self.time)
        try:
            return make_problem(ExampleId(int(self.example), int(self.setting)))
        except (ValueError, UnknownExample) as exc:
            raise ConfigError(f"unknown example {self.example!r} setting {self.setting}: {exc}") from exc

    def mesh(self, problem) -> MeshConfig:
        fine, coarse = _counts(self.nf, problem.dim), _counts(self.nc, problem.dim)
        try:
            return MeshConfig(fine, coarse, time_axis=problem.time_dependent)
        except MeshError as exc:
            raise ConfigError(str(exc)) from exc

    def options(self, **overrides) -> algorithm.IterationOptions:
        opts = algorithm.IterationOptions(
            tol=self.tol,
            max_iter=self.max_iter,
            stagnation_window=self.stagnation_window,
            stagnation_ratio=self.stagnation_ratio,
            subsample=self.subsample,
            rng_seed=self.seed,
            timing=self.timing,
        )
        return dataclasses.replace(opts, **overrides)


def _counts(text: str, dim: int) -> tuple[int, ...]:
    try:
        values = [int(v) for v in str(text).split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad mesh count {text!r}") from exc
    if len(values) == 1:
        values = values * dim
    if len(values) != dim:
        raise ConfigError(f"need 1 or {dim} mesh counts, got {text!r}")
    return tuple(values)


def read_config_file(path: str) -> dict[str, str]:
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


_BOOL = {"1": True, "true": True, "yes": True, "on": True, "0": False, "false": False, "no": False, "off": False}


def build_run_config(args: argparse.Namespace) -> RunConfig:
    fields = {f.name: f for f in dataclasses.fields(RunConfig)}
    values: dict[str, object] = {}
    if getattr(args, "config", None):
        try:
            raw = read_config_file(args.config)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        for key, value in raw.items():
            if key not in fields:
                raise ConfigError(f"unknown config key {key!r}")
            values[key] = value
    for key in fields:
        value = getattr(args, key, None)
        if value is not None:
            values[key] = value
    cfg = RunConfig()
    for key, value in values.items():
        default = getattr(cfg, key)
        try:
            if isinstance(value, str) and key not in ("example", "nf", "nc", "out", "alpha", "beta"):
                if isinstance(default, bool):
                    value = _BOOL[value.lower()]
                elif key in ("setting", "max_iter", "seed", "stagnation_window", "at_iter"):
                    value = int(value)
                else:
                    value = float(value)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {value!r}") from exc
        setattr(cfg, key, value)
    if cfg.subsample is not None and not 0 < cfg.subsample <= 1:
        raise ConfigError("--subsample must lie in (0, 1]")
    if cfg.max_iter < 0:
        raise ConfigError("--max-iter must be >= 0")
    return cfg


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def history_csv(history) -> str:
    lines = [CSV_HEADER]
    for row in history:
        lines.append(",".join([str(row.k)] + [_fmt(getattr(row, c)) for c in CSV_HEADER.split(",")[1:]]))
    return "\n".join(lines) + "\n"


def _write(text: str, path: str | None):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def cmd_run(cfg: RunConfig) -> int:
    problem = cfg.problem()
    config = cfg.mesh(problem)
    state = algorithm.asdsm_iterate(problem, config, cfg.options())
    _write(history_csv(state.history), cfg.out)
    last = state.history[-1]
    print(f"{problem.name} {config}: k={state.k} res_l2={last.res_l2:.3e} stop={state.stop_reason}",
          file=sys.stderr)
    return 0


def cmd_snapshot(cfg: RunConfig) -> int:
    problem = cfg.problem()
    config = cfg.mesh(problem)
    if config.dim != 2:
        raise ConfigError("snapshot supports 2D (space or space-time) problems only")
    at_iter = cfg.max_iter if cfg.at_iter is None else cfg.at_iter
    if not 0 <= at_iter <= cfg.max_iter:
        raise ConfigError("--at-iter must lie in 0..max-iter")
    captured = {}

    def grab(state):
        if state.k == at_iter:
            captured["r"] = state.r.copy()

    state = algorithm.asdsm_iterate(problem, config, cfg.options(max_iter=at_iter, stagnation_window=0, tol=0.0),
                                    callback=grab)
    r = captured.get("r", state.r)
    grid = np.abs(algorithm.as_grid(config, config.fine_kind, r))
    text = "".join(",".join(_fmt(v) for v in grid[:, j]) + "\n" for j in range(grid.shape[1]))
    _write(text, cfg.out)
    return 0


def cmd_verify(suite: str) -> int:
    checks = verify.run_suite(suite)
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 1 if failed else 0


def _add_run_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key=value settings file; flags override it")
    p.add_argument("--example", help="1-4, or 'custom'")
    p.add_argument("--setting", type=int)
    p.add_argument("--nf", help="fine counts, one value or one per axis (comma separated)")
    p.add_argument("--nc", help="coarse counts, one value or one per axis")
    p.add_argument("--tol", type=float, help="relative 2-norm residual tolerance")
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--subsample", type=float, help="fraction of skeleton rows used for the step length")
    p.add_argument("--out", help="output CSV path (default stdout)")
    p.add_argument("--stagnation-window", dest="stagnation_window", type=int, help="0 disables")
    p.add_argument("--stagnation-ratio", dest="stagnation_ratio", type=float)
    p.add_argument("--no-timing", dest="timing", action="store_const", const=False,
                   help="write wall_ms as 0 so output is byte-reproducible")
    p.add_argument("--alpha", help="custom problem: constant diffusion per spatial axis")
    p.add_argument("--beta", help="custom problem: constant velocity per spatial axis")
    p.add_argument("--wave", type=float, help="custom problem: wave number of the exact solution")
    p.add_argument("--time", action="store_const", const=True, help="custom problem: last axis is time")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="asdsm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_flags(sub.add_parser("run", help="iterate and write the residual history CSV"))
    snap = sub.add_parser("snapshot", help="write |residual| on the fine grid at one iteration")
    _add_run_flags(snap)
    snap.add_argument("--at-iter", dest="at_iter", type=int)
    ver = sub.add_parser("verify", help="run an invariant suite")
    ver.add_argument("suite", choices=[*verify.SUITES, "all"])
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    if args.command == "verify":
        return cmd_verify(args.suite)
    try:
        cfg = build_run_config(args)
        return cmd_run(cfg) if args.command == "run" else cmd_snapshot(cfg)
    except ConfigError as exc:
        print(f"asdsm: configuration error: {exc}", file=sys.stderr)
        return 2
    except ASDSMError as exc:
        print(f"asdsm: numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
