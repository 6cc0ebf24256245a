"""Reference binary optimizers: cGA, PBIL, and the (1+1)-EA.

All three maximize, use the ask/tell interface, and keep probability-vector
entries inside [1/N, 1 - 1/N] so every bit stays mutable. Ties are handled
conservatively: cGA skips the update, PBIL and the (1+1)-EA prefer by draw
order (equal fitness is accepted in the EA).
"""

from __future__ import annotations

import math

import numpy as np

from .rng import RandomStream
from .space import SearchSpace

__all__ = ["CompactGeneticAlgorithm", "Pbil", "OnePlusOneEa"]


def _require_binary(space: SearchSpace) -> None:
    if not (space.fully_discrete and space.all_binary):
        raise ValueError("this optimizer only supports fully binary search spaces")
    for values in space.discrete_sets:
        if values[0] != 0.0 or values[1] != 1.0:
            raise ValueError("binary sets must be {0, 1}")


class _ProbabilityVectorBase:
    def __init__(self, space: SearchSpace, stream: RandomStream):
        _require_binary(space)
        self.space = space
        self.n = space.dim
        self.stream = stream
        self.p = np.full(self.n, 0.5)
        self._floor = 1.0 / self.n
        self._pending: np.ndarray | None = None

    def _clamp(self) -> None:
        np.clip(self.p, self._floor, 1.0 - self._floor, out=self.p)


class CompactGeneticAlgorithm(_ProbabilityVectorBase):
    """cGA with learning rate 1/N; two evaluations per iteration."""

    ask_size = 2

    def ask(self) -> list[np.ndarray]:
        if self._pending is not None:
            raise RuntimeError("ask() called twice without tell()")
        self._pending = np.stack(
            [self.stream.bernoulli_vector(self.p), self.stream.bernoulli_vector(self.p)]
        )
        return [self._pending[0].copy(), self._pending[1].copy()]

    def tell(self, values) -> None:
        if self._pending is None:
            raise RuntimeError("tell() called before ask()")
        a, b = self._pending
        self._pending = None
        fa, fb = values
        if fa == fb:
            return
        winner, loser = (a, b) if fa > fb else (b, a)
        self.p += (winner - loser) * self._floor
        self._clamp()


class Pbil(_ProbabilityVectorBase):
    """PBIL moving the probability vector toward the best of lambda samples."""

    def __init__(
        self,
        space: SearchSpace,
        stream: RandomStream,
        population_size: int | None = None,
        learning_rate: float | None = None,
    ):
        super().__init__(space, stream)
        if population_size is None:
            population_size = 4 + math.floor(3 * math.log(self.n))
        self.ask_size = population_size
        self.learning_rate = self._floor if learning_rate is None else learning_rate

    def ask(self) -> list[np.ndarray]:
        if self._pending is not None:
            raise RuntimeError("ask() called twice without tell()")
        self._pending = np.stack(
            [self.stream.bernoulli_vector(self.p) for _ in range(self.ask_size)]
        )
        return [row.copy() for row in self._pending]

    def tell(self, values) -> None:
        if self._pending is None:
            raise RuntimeError("tell() called before ask()")
        samples = self._pending
        self._pending = None
        best = max(range(len(values)), key=lambda i: (values[i], -i))
        r = self.learning_rate
        self.p = (1.0 - r) * self.p + r * samples[best]
        self._clamp()


class OnePlusOneEa:
    """(1+1)-EA with static mutation rate 1/N, accepting equal fitness.

    The first ask/tell round evaluates the random initial parent.
    """

    ask_size = 1

    def __init__(self, space: SearchSpace, stream: RandomStream):
        _require_binary(space)
        self.space = space
        self.n = space.dim
        self.stream = stream
        self.parent = stream.bernoulli_vector(np.full(self.n, 0.5))
        self.f_parent = None
        self._rate = 1.0 / self.n
        self._pending: np.ndarray | None = None

    def ask(self) -> list[np.ndarray]:
        if self._pending is not None:
            raise RuntimeError("ask() called twice without tell()")
        if self.f_parent is None:
            self._pending = self.parent
            return [self.parent.copy()]
        flips = self.stream.bernoulli_vector(np.full(self.n, self._rate))
        child = np.where(flips == 1.0, 1.0 - self.parent, self.parent)
        self._pending = child
        return [child.copy()]

    def tell(self, values) -> None:
        if self._pending is None:
            raise RuntimeError("tell() called before ask()")
        candidate = self._pending
        self._pending = None
        (value,) = values
        if self.f_parent is None or value >= self.f_parent:
            self.parent = candidate
            self.f_parent = value
