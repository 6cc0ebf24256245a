"""Benchmark objectives on mixed-integer, integer, and binary domains.

Mixed problems put the continuous block first, then the discrete block;
integer variables take values in [-10, 10]. The three binary problems are
maximized, everything else is minimized. BinVal is computed in exact Python
integers so fitness comparisons and the all-ones success check never lose
precision, at any dimension.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .space import SearchSpace

__all__ = ["Problem", "make_problem", "PROBLEM_NAMES"]

PROBLEM_NAMES = (
    "sphere-one-max",
    "sphere-leading-ones",
    "ellipsoid-one-max",
    "ellipsoid-leading-ones",
    "sphere-int",
    "ellipsoid-int",
    "one-max",
    "leading-ones",
    "bin-val",
)


@dataclass
class Problem:
    """A benchmark objective with its space and success criterion.

    `target` is a threshold on the objective value (minimization problems
    with a continuous block); `optimum` is the exact optimal point for fully
    discrete problems. Exactly one of the two is set.
    """

    name: str
    space: SearchSpace
    objective: Callable[[np.ndarray], float]
    sense: str  # "min" | "max"
    target: float | None = None
    optimum: np.ndarray | None = field(default=None, repr=False)

    def is_success(self, point: np.ndarray, value) -> bool:
        if self.optimum is not None:
            return bool(np.array_equal(point, self.optimum))
        return value <= self.target if self.sense == "min" else value >= self.target

    def better(self, a, b) -> bool:
        """True if value a is strictly better than b in this problem's sense."""
        return a < b if self.sense == "min" else a > b


def _ellipsoid_weights(n: int) -> np.ndarray:
    if n < 2:
        raise ValueError("ellipsoid coefficients need at least two dimensions")
    return 1000.0 ** (2.0 * np.arange(n) / (n - 1))


def _one_max_deficit(bits: np.ndarray) -> float:
    return bits.size - float(np.sum(bits))


def _leading_ones_deficit(bits: np.ndarray) -> float:
    return bits.size - float(np.sum(np.cumprod(bits)))


def _split(name: str, n: int, n_co: int | None) -> int:
    if n_co is None:
        if n % 2 != 0:
            raise ValueError(f"{name} needs an even dimension or an explicit n_co")
        n_co = n // 2
    if not 0 < n_co < n:
        raise ValueError(f"n_co must lie strictly between 0 and {n}, got {n_co}")
    return n_co


def make_problem(name: str, n: int, n_co: int | None = None) -> Problem:
    """Build a registered benchmark problem of total dimension n.

    n_co selects the continuous block size for the mixed problems (default
    n/2); the integer problems accept n_co=0 for the fully discrete variant
    (the default); the binary problems are always fully discrete.
    """
    if n < 2:
        raise ValueError("benchmark dimension must be >= 2")

    if name in ("one-max", "leading-ones", "bin-val"):
        if n_co not in (None, 0):
            raise ValueError(f"{name} is a fully binary problem; n_co must be 0")
        space = SearchSpace.binary(n)
        ones = np.ones(n)
        if name == "one-max":
            objective = lambda v: float(np.sum(v))  # noqa: E731
        elif name == "leading-ones":
            objective = lambda v: float(np.sum(np.cumprod(v)))  # noqa: E731
        else:

            def objective(v: np.ndarray) -> int:
                total = 0
                for bit in v:
                    total = (total << 1) | int(bit)
                return total

        return Problem(name, space, objective, sense="max", optimum=ones)

    if name in ("sphere-int", "ellipsoid-int"):
        if n_co is None:
            n_co = 0
        if not 0 <= n_co < n:
            raise ValueError(f"n_co must lie in [0, {n}), got {n_co}")
        space = SearchSpace.integer_range(n - n_co, -10, 10, n_continuous=n_co)
        if name == "sphere-int":
            objective = lambda v: float(np.sum(np.square(v)))  # noqa: E731
        else:
            weights = _ellipsoid_weights(n)
            objective = lambda v: float(np.sum(weights * np.square(v)))  # noqa: E731
        if n_co == 0:
            return Problem(name, space, objective, sense="min", optimum=np.zeros(n))
        return Problem(name, space, objective, sense="min", target=1e-10)

    if name in (
        "sphere-one-max",
        "sphere-leading-ones",
        "ellipsoid-one-max",
        "ellipsoid-leading-ones",
    ):
        n_co = _split(name, n, n_co)
        space = SearchSpace.binary(n - n_co, n_continuous=n_co)
        if name.startswith("sphere"):
            cont = lambda x: float(np.sum(np.square(x)))  # noqa: E731
        else:
            weights = _ellipsoid_weights(n_co)
            cont = lambda x: float(np.sum(weights * np.square(x)))  # noqa: E731
        deficit = _one_max_deficit if name.endswith("one-max") else _leading_ones_deficit

        def objective(v: np.ndarray, _nc=n_co, _cont=cont, _def=deficit) -> float:
            return _cont(v[:_nc]) + _def(v[_nc:])

        return Problem(name, space, objective, sense="min", target=1e-10)

    raise ValueError(f"unknown problem {name!r}; known: {', '.join(PROBLEM_NAMES)}")
