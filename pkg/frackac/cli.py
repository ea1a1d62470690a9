#!/usr/bin/env python3
"""
Command-line front end.

Subcommands:
    solve        point estimates with standard errors
    convergence  L2 error sweep in M or dt with a fitted rate
    field        estimates on a 2-D grid clipped to the domain, one file per time

Settings come from a JSON job file; flags override the file and the file
overrides DEFAULTS. Usage:

    python -m frackac.cli solve --config configs/example1_small_orders.json --workers 4
"""

import argparse
import copy
import csv
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime
from typing import Dict, List, Optional

import numpy as np

from logger_config import setup_logger
from .errors import ConfigurationError, FrackacError, UsageError
from .harness import sweep, table_metadata, write_convergence_table, write_metadata
from .problems import Problem, problem_from_spec
from .solver import SolverConfig, estimate_field

logger = setup_logger("cli")

COMMANDS = ("solve", "convergence", "field")
WORKERS_ENV = "FRACKAC_WORKERS"

# Every setting and its default. "domain" is a free-form tagged record.
DEFAULTS = {
    "command": None,
    "problem": {"name": "example1", "alpha": 1.3, "beta": 0.6, "dim": 2, "horizon": 1.0, "params": {}},
    "domain": None,
    "solver": {
        "dt": 1e-3,
        "num_paths": 10000,
        "master_seed": 0,
        "max_steps": None,
        "chunk_size": 256,
        "block_size": 128,
    },
    "solve": {"time": None, "points": None},
    "harness": {"num_eval_points": 200, "eval_seed": 12345, "axis": "num_paths", "values": []},
    "field": {"resolution": 50, "times": []},
    "output": {"directory": "results", "prefix": None},
}

_FREE_FORM = {"domain", "problem.params"}


def _convert(value, kind, name: str):
    if value is None:
        return None
    try:
        if kind is int and isinstance(value, float) and not value.is_integer():
            raise ValueError(value)
        if kind is not str and isinstance(value, (str, bool)):
            raise ValueError(value)
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"expected {kind.__name__}, got {value!r}", field=name)


@dataclass
class ProblemSettings:
    name: str
    alpha: float
    beta: float
    dim: int
    horizon: float
    params: Dict = field(default_factory=dict)

    def __post_init__(self):
        self.name = _convert(self.name, str, "problem.name")
        self.alpha = _convert(self.alpha, float, "problem.alpha")
        self.beta = _convert(self.beta, float, "problem.beta")
        self.dim = _convert(self.dim, int, "problem.dim")
        self.horizon = _convert(self.horizon, float, "problem.horizon")
        if not isinstance(self.params, dict):
            raise ConfigurationError("expected a JSON object", field="problem.params")
        if not (0 < self.alpha <= 2):
            raise ConfigurationError(f"must lie in (0, 2], got {self.alpha}", field="problem.alpha")
        if not (0 < self.beta <= 1):
            raise ConfigurationError(f"must lie in (0, 1], got {self.beta}", field="problem.beta")
        if self.dim < 2:
            raise ConfigurationError(f"must be >= 2, got {self.dim}", field="problem.dim")
        if not self.horizon > 0:
            raise ConfigurationError(f"must be positive, got {self.horizon}", field="problem.horizon")


@dataclass
class SolverSettings:
    dt: float
    num_paths: int
    master_seed: int
    max_steps: Optional[int]
    chunk_size: int
    block_size: int

    def __post_init__(self):
        self.dt = _convert(self.dt, float, "solver.dt")
        self.num_paths = _convert(self.num_paths, int, "solver.num_paths")
        self.master_seed = _convert(self.master_seed, int, "solver.master_seed")
        self.max_steps = _convert(self.max_steps, int, "solver.max_steps")
        self.chunk_size = _convert(self.chunk_size, int, "solver.chunk_size")
        self.block_size = _convert(self.block_size, int, "solver.block_size")


@dataclass
class SolveSettings:
    time: Optional[float]
    points: Optional[List[List[float]]]

    def __post_init__(self):
        self.time = _convert(self.time, float, "solve.time")
        if self.points is not None:
            if not isinstance(self.points, list) or not all(isinstance(p, list) for p in self.points):
                raise ConfigurationError("expected a list of points", field="solve.points")
            self.points = [[_convert(c, float, "solve.points") for c in p] for p in self.points]


@dataclass
class HarnessSettings:
    num_eval_points: int
    eval_seed: int
    axis: str
    values: List[float]

    def __post_init__(self):
        self.num_eval_points = _convert(self.num_eval_points, int, "harness.num_eval_points")
        self.eval_seed = _convert(self.eval_seed, int, "harness.eval_seed")
        self.axis = _convert(self.axis, str, "harness.axis")
        if not isinstance(self.values, list):
            raise ConfigurationError("expected a list", field="harness.values")
        self.values = [_convert(v, float, "harness.values") for v in self.values]
        if self.num_eval_points < 1:
            raise ConfigurationError(f"must be >= 1, got {self.num_eval_points}", field="harness.num_eval_points")
        if self.axis not in ("num_paths", "dt"):
            raise ConfigurationError(f"must be num_paths or dt, got {self.axis!r}", field="harness.axis")


@dataclass
class FieldSettings:
    resolution: int
    times: List[float]

    def __post_init__(self):
        self.resolution = _convert(self.resolution, int, "field.resolution")
        if not isinstance(self.times, list):
            raise ConfigurationError("expected a list", field="field.times")
        self.times = [_convert(v, float, "field.times") for v in self.times]
        if self.resolution < 2:
            raise ConfigurationError(f"must be >= 2, got {self.resolution}", field="field.resolution")


@dataclass
class OutputSettings:
    directory: str
    prefix: Optional[str]


@dataclass
class RunConfig:
    """Fully resolved job settings."""

    command: Optional[str]
    problem: ProblemSettings
    domain: Optional[Dict]
    solver: SolverSettings
    solve: SolveSettings
    harness: HarnessSettings
    field: FieldSettings
    output: OutputSettings

    @classmethod
    def from_dict(cls, data: Dict) -> "RunConfig":
        domain = data.get("domain")
        if domain is not None and not (isinstance(domain, dict) and "kind" in domain):
            raise ConfigurationError("expected a record with a 'kind' entry", field="domain")
        return cls(
            command=data.get("command"),
            problem=ProblemSettings(**data["problem"]),
            domain=domain,
            solver=SolverSettings(**data["solver"]),
            solve=SolveSettings(**data["solve"]),
            harness=HarnessSettings(**data["harness"]),
            field=FieldSettings(**data["field"]),
            output=OutputSettings(**data["output"]),
        )

    def to_dict(self) -> Dict:
        return asdict(self)

    @property
    def prefix(self) -> str:
        return self.output.prefix or self.problem.name

    def solver_config(self) -> SolverConfig:
        s = self.solver
        return SolverConfig(
            dt=s.dt,
            num_paths=s.num_paths,
            master_seed=s.master_seed,
            max_steps=s.max_steps,
            chunk_size=s.chunk_size,
            block_size=s.block_size,
        )

    def build_problem(self) -> Problem:
        p = self.problem
        return problem_from_spec(p.name, p.alpha, p.beta, p.dim, p.horizon, domain=self.domain, params=p.params)


def load_config_file(path: str) -> Dict:
    """Read a JSON job file, reporting syntax errors with line and column."""
    if not os.path.exists(path):
        raise ConfigurationError(f"config file {path} not found", field="--config")
    with open(path, "r") as f:
        text = f.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}", field=path)
    if not isinstance(data, dict):
        raise ConfigurationError("top level must be a JSON object", field=path)
    return data


def merge_settings(defaults: Dict, overrides: Dict, path: str = "") -> Dict:
    """Recursive merge that rejects keys not present in the defaults."""
    merged = copy.deepcopy(defaults)
    for key, value in overrides.items():
        dotted = f"{path}.{key}" if path else key
        if key not in defaults:
            raise ConfigurationError("unknown setting", field=dotted)
        if isinstance(defaults[key], dict) and dotted not in _FREE_FORM:
            if not isinstance(value, dict):
                raise ConfigurationError("expected a JSON object", field=dotted)
            merged[key] = merge_settings(defaults[key], value, dotted)
        else:
            merged[key] = value
    return merged


def resolve_workers(flag: Optional[int]) -> int:
    """Worker count: --workers > FRACKAC_WORKERS > CPU count."""
    if flag is not None:
        workers = flag
    elif os.environ.get(WORKERS_ENV):
        raw = os.environ[WORKERS_ENV].strip()
        if not raw.isdigit():
            raise ConfigurationError(f"expected a positive integer, got {raw!r}", field=WORKERS_ENV)
        workers = int(raw)
    else:
        workers = os.cpu_count() or 1
    if workers < 1:
        raise ConfigurationError(f"must be >= 1, got {workers}", field="--workers")
    return workers


def resolve_run_config(args) -> RunConfig:
    """
    Resolve settings from flags, config file and defaults.

    Priority: CLI args > config file > defaults
    """
    data = load_config_file(args.config) if args.config else {}
    file_command = data.get("command")
    if file_command is not None and file_command not in COMMANDS:
        raise ConfigurationError(f"must be one of {', '.join(COMMANDS)}, got {file_command!r}", field="command")

    merged = merge_settings(DEFAULTS, data)
    merged["command"] = args.command
    if args.seed is not None:
        merged["solver"]["master_seed"] = args.seed
    if args.out is not None:
        merged["output"]["directory"] = args.out
    return RunConfig.from_dict(merged)


def validate_run_config(config: RunConfig) -> Problem:
    """Reject invalid combinations before anything runs; returns the built problem."""
    problem = config.build_problem()
    config.solver_config()
    horizon = problem.horizon

    if config.command == "solve":
        points = config.solve.points
        if not points:
            raise ConfigurationError("solve needs at least one point", field="solve.points")
        for p in points:
            if len(p) != problem.dim:
                raise ConfigurationError(f"point {p} does not have dimension {problem.dim}", field="solve.points")
            if not problem.domain.contains(np.asarray(p)):
                raise ConfigurationError(f"point {p} lies outside the domain", field="solve.points")
        t = config.solve.time if config.solve.time is not None else horizon
        if not (0 < t <= horizon):
            raise ConfigurationError(f"must lie in (0, {horizon}], got {t}", field="solve.time")

    elif config.command == "convergence":
        if not config.harness.values:
            raise ConfigurationError("sweep list is empty", field="harness.values")
        if len(set(config.harness.values)) < 3 or min(config.harness.values) <= 0:
            raise ConfigurationError("sweep needs at least 3 distinct positive values", field="harness.values")
        if not problem.has_exact:
            raise ConfigurationError(f"{problem.name} has no exact solution to sweep against", field="problem.name")

    elif config.command == "field":
        if problem.dim != 2:
            raise ConfigurationError(f"field export is 2-D only, got n={problem.dim}", field="problem.dim")
        if not config.field.times:
            raise ConfigurationError("time list is empty", field="field.times")
        for t in config.field.times:
            if not (0 < t <= horizon):
                raise ConfigurationError(f"must lie in (0, {horizon}], got {t}", field="field.times")
        if problem.domain.grid_points(config.field.resolution).size == 0:
            raise ConfigurationError("grid has no points inside the domain", field="field.resolution")

    return problem


def _fmt(value: float) -> str:
    return repr(float(value))


def _write_rows(path: str, header: List[str], rows: List[List[str]]):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    logger.info(f"Wrote {len(rows)} row(s) to {path}")


def cmd_solve(config: RunConfig, workers: int = 1) -> int:
    """Point estimates with standard errors, one CSV row per point."""
    problem = validate_run_config(config)
    t = config.solve.time if config.solve.time is not None else problem.horizon
    points = np.asarray(config.solve.points, dtype=float)
    estimates = estimate_field(problem, t, points, config.solver_config(), workers)

    header = [f"x{i + 1}" for i in range(problem.dim)] + ["time", "estimate", "std_error", "num_paths"]
    exact = None
    if problem.has_exact:
        header.append("exact")
        exact = np.atleast_1d(problem.exact(t, points))
    rows = []
    for i, (p, e) in enumerate(zip(points, estimates)):
        row = [_fmt(c) for c in p] + [_fmt(t), _fmt(e.mean), _fmt(e.std_error), str(e.num_paths)]
        if exact is not None:
            row.append(_fmt(exact[i]))
        rows.append(row)
        logger.info(f"u({t}, {p.tolist()}) = {e.mean:.6f} +- {e.std_error:.6f} (M={e.num_paths})")

    _write_rows(os.path.join(config.output.directory, f"{config.prefix}_solve.csv"), header, rows)
    return 0


def cmd_convergence(config: RunConfig, workers: int = 1) -> int:
    """Sweep CSV plus a JSON side-car with the fitted slope."""
    problem = validate_run_config(config)
    h = config.harness
    table = sweep(
        problem,
        problem.horizon,
        config.solver_config(),
        h.axis,
        h.values,
        h.num_eval_points,
        h.eval_seed,
        workers=workers,
    )
    base = os.path.join(config.output.directory, f"{config.prefix}_convergence")
    write_convergence_table(table, base + ".csv")
    write_metadata(table_metadata(table, {"run_config": config.to_dict()}), base + ".json")
    logger.info(f"Fitted slope for {h.axis}: {table.fitted_slope:.4f} +- {table.slope_stderr:.4f}")
    return 0


def cmd_field(config: RunConfig, workers: int = 1) -> int:
    """Grid estimates, one CSV per requested time."""
    problem = validate_run_config(config)
    grid = problem.domain.grid_points(config.field.resolution)
    solver_config = config.solver_config()
    for t in config.field.times:
        estimates = estimate_field(problem, t, grid, solver_config, workers)
        rows = [[_fmt(p[0]), _fmt(p[1]), _fmt(e.mean)] for p, e in zip(grid, estimates)]
        path = os.path.join(config.output.directory, f"{config.prefix}_field_t{t!r}.csv")
        _write_rows(path, ["x1", "x2", "estimate"], rows)
    return 0


HANDLERS = {"solve": cmd_solve, "convergence": cmd_convergence, "field": cmd_field}


class CliArgumentParser(argparse.ArgumentParser):
    """Argument parser that raises UsageError instead of exiting on bad arguments."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def create_argument_parser() -> argparse.ArgumentParser:
    common = CliArgumentParser(add_help=False)
    common.add_argument("--config", help="Path to a JSON job file (default: built-in defaults only)")
    common.add_argument("--seed", type=int, help="Master seed (overrides solver.master_seed)")
    common.add_argument("--workers", type=int, help=f"Worker processes (default: ${WORKERS_ENV} or CPU count)")
    common.add_argument("--out", help="Output directory (overrides output.directory)")
    common.add_argument("--dry-run", action="store_true", help="Print the resolved config and exit")

    parser = CliArgumentParser(
        description="Monte Carlo solver for space-time fractional diffusion"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="Estimate the solution at points")
    sub.add_parser("convergence", parents=[common], help="Run an L2 error sweep in M or dt")
    sub.add_parser("field", parents=[common], help="Estimate on a 2-D grid for several times")
    return parser


def run(args) -> int:
    config = resolve_run_config(args)
    workers = resolve_workers(args.workers)
    if args.dry_run:
        resolved = config.to_dict()
        resolved["workers"] = workers
        print(json.dumps(resolved, indent=2, sort_keys=True))
        return 0

    logger.info("=" * 70)
    logger.info(f"{args.command} started at {datetime.now().strftime('%Y-%m-%d %H:%M:%S')} with {workers} worker(s)")
    logger.info("=" * 70)
    return HANDLERS[args.command](config, workers)


def report_failure(error: Exception) -> int:
    """Print the single-line `error=<CODE> <message>` diagnostic and return the exit status."""
    code = error.code if isinstance(error, FrackacError) else "INTERNAL"
    message = " ".join(str(error).split())
    print(f"error={code} {message}", file=sys.stderr)
    logger.error(f"{code}: {message}")
    return 2 if isinstance(error, FrackacError) else 1


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = create_argument_parser().parse_args(argv)
        return run(args)
    except Exception as e:
        return report_failure(e)


if __name__ == "__main__":
    sys.exit(main())
