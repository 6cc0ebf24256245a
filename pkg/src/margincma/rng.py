"""Seedable random stream with a pinned algorithm for bit-exact trials.

Raw 64-bit words come from the Philox4x64-10 counter-based generator keyed
directly by the seed; uniforms are (raw >> 11) * 2**-53 and normal variates
use the Box-Muller transform with the second variate of each pair cached.
Identical (algorithm, seed) therefore yields an identical draw sequence, and
distinct seeds (base_seed + trial_index) yield independent streams.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["RandomStream", "ALGORITHM"]

ALGORITHM = "philox4x64-10+box-muller"

_INV_2_53 = 2.0 ** -53
_TWO_PI = 2.0 * math.pi
_BUFFER = 8192


class RandomStream:
    """Deterministic draw stream for one trial."""

    algorithm = ALGORITHM

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._bits = np.random.Philox(key=self.seed)
        self._raw = np.empty(0, dtype=np.uint64)
        self._pos = 0
        self._spare: float | None = None

    def _take_raw(self, n: int) -> np.ndarray:
        avail = len(self._raw) - self._pos
        if avail >= n:
            out = self._raw[self._pos : self._pos + n]
            self._pos += n
            return out
        parts = [self._raw[self._pos :]]
        need = n - avail
        refill = self._bits.random_raw(max(_BUFFER, need))
        parts.append(refill[:need])
        self._raw = refill
        self._pos = need
        return np.concatenate(parts) if avail else parts[1]

    # -- uniforms ------------------------------------------------------------

    def uniform(self) -> float:
        """One double in [0, 1)."""
        return float(self._take_raw(1)[0] >> np.uint64(11)) * _INV_2_53

    def uniform_vector(self, n: int) -> np.ndarray:
        return (self._take_raw(n) >> np.uint64(11)).astype(float) * _INV_2_53

    # -- normals ---------------------------------------------------------------

    def standard_normal(self) -> float:
        """One N(0, 1) draw (Box-Muller, spare cached)."""
        if self._spare is not None:
            z, self._spare = self._spare, None
            return z
        u = self.uniform_vector(2)
        r = math.sqrt(-2.0 * math.log(1.0 - u[0]))
        theta = _TWO_PI * u[1]
        self._spare = r * math.sin(theta)
        return r * math.cos(theta)

    def normal_vector(self, n: int) -> np.ndarray:
        """n N(0, 1) draws, identical to n standard_normal() calls."""
        out = np.empty(n)
        start = 0
        if self._spare is not None and n > 0:
            out[0], self._spare = self._spare, None
            start = 1
        remaining = n - start
        if remaining > 0:
            pairs = (remaining + 1) // 2
            u = self.uniform_vector(2 * pairs)
            r = np.sqrt(-2.0 * np.log(1.0 - u[0::2]))
            theta = _TWO_PI * u[1::2]
            z = np.empty(2 * pairs)
            z[0::2] = r * np.cos(theta)
            z[1::2] = r * np.sin(theta)
            out[start:] = z[:remaining]
            if remaining % 2 == 1:
                self._spare = float(z[remaining])
        return out

    def normal_matrix(self, rows: int, cols: int) -> np.ndarray:
        return self.normal_vector(rows * cols).reshape(rows, cols)

    # -- discrete --------------------------------------------------------------

    def bernoulli(self, p: float) -> int:
        """One {0, 1} draw; consumes exactly one uniform."""
        if not 0.0 <= p <= 1.0:
            raise ValueError("bernoulli probability must lie in [0, 1]")
        return int(self.uniform() < p)

    def bernoulli_vector(self, p: np.ndarray) -> np.ndarray:
        """Elementwise Bernoulli draws as 0.0/1.0, one uniform per entry."""
        p = np.asarray(p, dtype=float)
        if np.any(p < 0.0) or np.any(p > 1.0):
            raise ValueError("bernoulli probabilities must lie in [0, 1]")
        return (self.uniform_vector(p.size) < p).astype(float)
