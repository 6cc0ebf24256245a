"""Experiment runner: seeded trial batches, termination rules, aggregation.

A trial runs one algorithm on one problem until the success criterion is met,
the evaluation budget (dim * budget_mult) would be exceeded by another
iteration, or the smallest eigenvalue of sigma^2*C falls below the floor.
Gaussian-based algorithms draw the initial mean per the benchmark protocol:
0.5 on binary coordinates, uniform in [1, 3] elsewhere, from the trial's own
stream, so every trial is reproducible from (base_seed + trial_index).
"""

from __future__ import annotations

import csv
import json
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .baselines import CompactGeneticAlgorithm, OnePlusOneEa, Pbil
from .benchmarks import PROBLEM_NAMES, Problem, make_problem
from .cma_wm import CmaWithMargin
from .elitist_wm import OnePlusOneCmaWithMargin
from .numerics import FactorizationError
from .rng import ALGORITHM as RNG_ALGORITHM
from .rng import RandomStream

__all__ = [
    "ALGORITHM_NAMES",
    "ConfigError",
    "RunConfig",
    "TraceRow",
    "TrialRecord",
    "run_trial",
    "run_batch",
    "aggregate",
    "write_records",
    "read_records",
    "write_summary",
    "write_trace",
    "write_metadata",
    "RECORD_HEADER",
]

ALGORITHM_NAMES = ("cma-wm", "elitist-wm", "cga", "pbil", "ea")
RECORD_HEADER = "algo,problem,dim,trial,seed,success,evaluations,best_f,reason"


class ConfigError(ValueError):
    """Invalid run configuration, detected before any evaluation."""


@dataclass
class RunConfig:
    algo: str
    problem: str
    dim: int
    n_co: int | None = None
    trials: int = 50
    base_seed: int = 1
    budget_mult: float = 1e5
    target: float = 1e-10
    eig_floor: float = 1e-30
    postprocess: bool = True
    ablate_mean_v: bool = False
    trace: bool = False
    jobs: int = 1

    def __post_init__(self):
        if self.algo not in ALGORITHM_NAMES:
            raise ConfigError(f"unknown algorithm {self.algo!r}; known: {ALGORITHM_NAMES}")
        if self.problem not in PROBLEM_NAMES:
            raise ConfigError(f"unknown problem {self.problem!r}; known: {PROBLEM_NAMES}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.budget_mult <= 0:
            raise ConfigError("budget multiplier must be positive")
        if self.budget < 1:
            raise ConfigError("evaluation budget must be >= 1")
        if self.ablate_mean_v and self.algo != "elitist-wm":
            raise ConfigError("--ablate-mean-v only applies to elitist-wm")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    @property
    def budget(self) -> int:
        return int(round(self.dim * self.budget_mult))


@dataclass
class TraceRow:
    iteration: int
    evaluations: int
    best_value: float
    sigma: float
    abs_mean: np.ndarray
    marginal_std: np.ndarray


@dataclass
class TrialRecord:
    algo: str
    problem: str
    dim: int
    trial: int
    seed: int
    success: bool
    evaluations: int
    best_value: float | int
    reason: str  # target | budget | eigenvalue-floor | factorization-error
    trace: list[TraceRow] | None = field(default=None, compare=False, repr=False)


def _initial_mean(problem: Problem, stream: RandomStream) -> np.ndarray:
    space = problem.space
    m0 = np.empty(space.dim)
    for j in range(space.dim):
        if space.is_discrete(j):
            values = space.discrete_sets[j - space.n_continuous]
            if len(values) == 2 and values[0] == 0.0 and values[1] == 1.0:
                m0[j] = 0.5
                continue
        m0[j] = 1.0 + 2.0 * stream.uniform()
    return m0


def _build_optimizer(config: RunConfig, problem: Problem, stream: RandomStream):
    space = problem.space
    try:
        if config.algo == "cma-wm":
            m0 = _initial_mean(problem, stream)
            return CmaWithMargin(
                space, m0, 1.0, stream=stream, postprocess=config.postprocess
            )
        if config.algo == "elitist-wm":
            m0 = _initial_mean(problem, stream)
            return OnePlusOneCmaWithMargin(
                space,
                m0,
                1.0,
                stream=stream,
                postprocess=config.postprocess,
                discretize_mean=not config.ablate_mean_v,
            )
        if config.algo == "cga":
            return CompactGeneticAlgorithm(space, stream)
        if config.algo == "pbil":
            return Pbil(space, stream)
        return OnePlusOneEa(space, stream)
    except ValueError as err:
        raise ConfigError(f"{config.algo} cannot run on {config.problem}: {err}") from err


def run_trial(config: RunConfig, trial_index: int) -> TrialRecord:
    """Run one seeded trial to completion and return its record."""
    seed = config.base_seed + trial_index
    stream = RandomStream(seed)
    problem = make_problem(config.problem, config.dim, config.n_co)
    if problem.target is not None:
        problem.target = config.target
    gaussian = config.algo in ("cma-wm", "elitist-wm")
    if not gaussian and problem.sense != "max":
        raise ConfigError(f"{config.algo} supports only the binary maximization problems")
    optimizer = _build_optimizer(config, problem, stream)
    negate = gaussian and problem.sense == "max"

    budget = config.budget
    evals = 0
    best_value = None
    best_point = None
    success = False
    reason = "budget"
    trace: list[TraceRow] | None = [] if config.trace and gaussian else None

    while True:
        if evals + optimizer.ask_size > budget:
            reason = "budget"
            break
        try:
            points = optimizer.ask()
        except FactorizationError:
            reason = "factorization-error"
            break
        values = [problem.objective(p) for p in points]
        evals += len(points)
        for p, value in zip(points, values):
            if best_value is None or problem.better(value, best_value):
                best_value = value
                best_point = p.copy()
        optimizer.tell([-v for v in values] if negate else values)
        if trace is not None:
            trace.append(
                TraceRow(
                    iteration=optimizer.iteration,
                    evaluations=evals,
                    best_value=best_value,
                    sigma=optimizer.sigma,
                    abs_mean=np.abs(optimizer.mean),
                    marginal_std=optimizer.marginal_stds(),
                )
            )
        if problem.is_success(best_point, best_value):
            success = True
            reason = "target"
            break
        if gaussian and optimizer.scaled_min_eigenvalue() < config.eig_floor:
            reason = "eigenvalue-floor"
            break

    return TrialRecord(
        algo=config.algo,
        problem=config.problem,
        dim=config.dim,
        trial=trial_index,
        seed=seed,
        success=success,
        evaluations=evals,
        best_value=best_value,
        reason=reason,
        trace=trace,
    )


def _run_trial_tuple(args) -> TrialRecord:
    config, index = args
    return run_trial(config, index)


def run_batch(config: RunConfig) -> list[TrialRecord]:
    """All trials of a config, in trial-index order."""
    indices = range(config.trials)
    if config.jobs == 1:
        return [run_trial(config, i) for i in indices]
    worker_config = replace(config, jobs=1)
    with ProcessPoolExecutor(max_workers=config.jobs) as pool:
        return list(pool.map(_run_trial_tuple, [(worker_config, i) for i in indices]))


def aggregate(records: list[TrialRecord]) -> list[dict]:
    """Per (algo, problem, dim) cell: success rate, evaluation quartiles over
    successful trials (linear interpolation), and median/success_rate."""
    cells: dict[tuple, list[TrialRecord]] = {}
    for record in records:
        cells.setdefault((record.algo, record.problem, record.dim), []).append(record)
    rows = []
    for (algo, problem, dim), cell in cells.items():
        successes = [r.evaluations for r in cell if r.success]
        rate = len(successes) / len(cell)
        if successes:
            q25, median, q75 = np.percentile(successes, [25, 50, 75])
            adjusted = median / rate
        else:
            q25 = median = q75 = adjusted = None
        rows.append(
            {
                "algo": algo,
                "problem": problem,
                "dim": dim,
                "trials": len(cell),
                "successes": len(successes),
                "success_rate": rate,
                "median_evals": median,
                "q25_evals": q25,
                "q75_evals": q75,
                "adjusted_median": adjusted,
            }
        )
    return rows


def _format_value(value) -> str:
    if value is None:
        return ""
    return repr(value) if isinstance(value, float) else str(value)


def write_records(path, records: list[TrialRecord]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(RECORD_HEADER.split(","))
        for r in records:
            writer.writerow(
                [
                    r.algo,
                    r.problem,
                    r.dim,
                    r.trial,
                    r.seed,
                    int(r.success),
                    r.evaluations,
                    _format_value(r.best_value),
                    r.reason,
                ]
            )


def _parse_value(text: str):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        return float(text)


def read_records(path) -> list[TrialRecord]:
    records = []
    with open(path, newline="") as handle:
        for row in csv.DictReader(handle):
            records.append(
                TrialRecord(
                    algo=row["algo"],
                    problem=row["problem"],
                    dim=int(row["dim"]),
                    trial=int(row["trial"]),
                    seed=int(row["seed"]),
                    success=bool(int(row["success"])),
                    evaluations=int(row["evaluations"]),
                    best_value=_parse_value(row["best_f"]),
                    reason=row["reason"],
                )
            )
    return records


def write_summary(path, rows: list[dict]) -> None:
    header = [
        "algo",
        "problem",
        "dim",
        "trials",
        "successes",
        "success_rate",
        "median_evals",
        "q25_evals",
        "q75_evals",
        "adjusted_median",
    ]
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if row[k] is None else row[k] for k in header])


def write_trace(path, record: TrialRecord) -> None:
    """Long-format per-iteration trace: one row per (iteration, coordinate)."""
    if record.trace is None:
        raise ValueError("record carries no trace")
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["iteration", "evaluations", "best_f", "sigma", "coord", "abs_m", "marginal_std"]
        )
        for row in record.trace:
            for j in range(len(row.abs_mean)):
                writer.writerow(
                    [
                        row.iteration,
                        row.evaluations,
                        _format_value(row.best_value),
                        repr(row.sigma),
                        j,
                        repr(float(row.abs_mean[j])),
                        repr(float(row.marginal_std[j])),
                    ]
                )


def write_metadata(path, config: RunConfig) -> None:
    """Sidecar pinning the stream algorithm and library versions."""
    meta = {
        "rng_algorithm": RNG_ALGORITHM,
        "numpy_version": np.__version__,
        "package_version": __version__,
        "python_version": platform.python_version(),
        "config": {k: v for k, v in vars(config).items()},
    }
    with open(path, "w") as handle:
        json.dump(meta, handle, indent=2, sort_keys=True)
        handle.write("\n")
