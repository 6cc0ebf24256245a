"""Mixed-integer search space and the midpoint-threshold encoding.

Dimensions are ordered continuous-first: indices 0..n_continuous-1 are
continuous, the rest are discrete with per-dimension admissible value sets.
A sampled real vector is mapped to a feasible point by snapping each discrete
coordinate to the admissible value whose midpoint cell contains it; a value
exactly at a midpoint maps to the lower admissible value.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

__all__ = ["SearchSpace"]


class SearchSpace:
    """Immutable description of a mixed continuous/discrete search space.

    Args:
        n_continuous: number of leading continuous dimensions (>= 0).
        discrete_sets: one strictly increasing sequence of admissible values
            per discrete dimension; each needs at least two values.
    """

    def __init__(self, n_continuous: int, discrete_sets: Sequence[Sequence[float]] = ()):
        if n_continuous < 0:
            raise ValueError("n_continuous must be >= 0")
        self.n_continuous = int(n_continuous)
        self.discrete_sets: list[np.ndarray] = []
        self.midpoints: list[np.ndarray] = []
        for i, values in enumerate(discrete_sets):
            arr = np.asarray(values, dtype=float)
            if arr.ndim != 1 or arr.size < 2:
                raise ValueError(f"discrete set {i} needs at least two values")
            if not np.all(np.diff(arr) > 0):
                raise ValueError(f"discrete set {i} must be strictly increasing")
            arr.setflags(write=False)
            mids = (arr[:-1] + arr[1:]) / 2.0
            mids.setflags(write=False)
            self.discrete_sets.append(arr)
            self.midpoints.append(mids)
        self.dim = self.n_continuous + len(self.discrete_sets)
        if self.dim < 1:
            raise ValueError("search space must have at least one dimension")
        self.n_discrete = len(self.discrete_sets)
        self.discrete_indices = np.arange(self.n_continuous, self.dim)
        # one shared value grid across all discrete dims enables vectorized
        # encode/cell lookups (the common case for the benchmark domains)
        self._shared = self.n_discrete > 0 and all(
            z.shape == self.discrete_sets[0].shape and np.array_equal(z, self.discrete_sets[0])
            for z in self.discrete_sets[1:]
        )

    # -- constructors ------------------------------------------------------

    @classmethod
    def binary(cls, n_bits: int, n_continuous: int = 0) -> "SearchSpace":
        return cls(n_continuous, [(0.0, 1.0)] * n_bits)

    @classmethod
    def integer_range(
        cls, n_integers: int, low: int, high: int, n_continuous: int = 0
    ) -> "SearchSpace":
        values = np.arange(low, high + 1, dtype=float)
        return cls(n_continuous, [values] * n_integers)

    @classmethod
    def continuous(cls, n: int) -> "SearchSpace":
        return cls(n, [])

    # -- queries -----------------------------------------------------------

    def is_discrete(self, j: int) -> bool:
        return j >= self.n_continuous

    def _set_for(self, j: int) -> int:
        if not self.is_discrete(j):
            raise ValueError(f"dimension {j} is continuous")
        return j - self.n_continuous

    @property
    def fully_discrete(self) -> bool:
        return self.n_continuous == 0 and self.n_discrete > 0

    @property
    def all_binary(self) -> bool:
        return self.n_discrete > 0 and all(len(z) == 2 for z in self.discrete_sets)

    def is_evenly_spaced(self, j: int) -> bool:
        gaps = np.diff(self.discrete_sets[self._set_for(j)])
        return bool(np.allclose(gaps, gaps[0], rtol=1e-12, atol=0.0))

    # -- encoding ----------------------------------------------------------

    def encode_index(self, j: int, value: float) -> int:
        """Index k into the admissible set such that value encodes to z[k]."""
        mids = self.midpoints[self._set_for(j)]
        return int(np.searchsorted(mids, value, side="left"))

    def encode(self, v: np.ndarray) -> np.ndarray:
        """Snap discrete coordinates of v to admissible values (Enc map)."""
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.dim:
            raise ValueError(f"expected vectors of length {self.dim}, got {v.shape[-1]}")
        out = v.astype(float, copy=True)
        if self._shared:
            values, mids = self.discrete_sets[0], self.midpoints[0]
            disc = out[..., self.n_continuous :]
            out[..., self.n_continuous :] = values[np.searchsorted(mids, disc, side="left")]
            return out
        for s, (values, mids) in enumerate(zip(self.discrete_sets, self.midpoints)):
            j = self.n_continuous + s
            idx = np.searchsorted(mids, v[..., j], side="left")
            out[..., j] = values[idx]
        return out

    def cell_geometry(
        self, m_discrete: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Midpoint cell around each discrete coordinate of a mean vector.

        Takes the n_discrete-length slice of the mean and returns (edge mask,
        nearest extreme midpoint, lower midpoint, upper midpoint); the
        bracketing pair is only meaningful off the mask, the extreme midpoint
        only on it.
        """
        if self._shared:
            mids = self.midpoints[0]
            k = np.searchsorted(mids, m_discrete, side="left")
            edge = (k == 0) | (k == len(mids))
            l_near = np.where(k == 0, mids[0], mids[-1])
            lo_idx = np.clip(k - 1, 0, len(mids) - 1)
            up_idx = np.clip(k, 0, len(mids) - 1)
            return edge, l_near, mids[lo_idx], mids[up_idx]
        edge = np.empty(self.n_discrete, dtype=bool)
        l_near = np.empty(self.n_discrete)
        l_low = np.empty(self.n_discrete)
        l_up = np.empty(self.n_discrete)
        for s in range(self.n_discrete):
            mids = self.midpoints[s]
            k = int(np.searchsorted(mids, m_discrete[s], side="left"))
            if k == 0 or k == len(mids):
                edge[s] = True
                l_near[s] = mids[0] if k == 0 else mids[-1]
                l_low[s] = l_up[s] = np.nan
            else:
                edge[s] = False
                l_near[s] = np.nan
                l_low[s] = mids[k - 1]
                l_up[s] = mids[k]
        return edge, l_near, l_low, l_up

    def nearest_midpoint(self, j: int, m_j: float) -> float:
        """Closest midpoint to m_j in dimension j; ties break low."""
        mids = self.midpoints[self._set_for(j)]
        pos = int(np.searchsorted(mids, m_j, side="left"))
        if pos == 0:
            return float(mids[0])
        if pos == len(mids):
            return float(mids[-1])
        below, above = float(mids[pos - 1]), float(mids[pos])
        return below if m_j - below <= above - m_j else above

    def bracketing_midpoints(self, j: int, m_j: float) -> tuple[float, float]:
        """Adjacent midpoints (low, up) with low < m_j <= up.

        Only defined when m_j encodes to an interior admissible value; edge
        values must be handled by the caller.
        """
        mids = self.midpoints[self._set_for(j)]
        pos = int(np.searchsorted(mids, m_j, side="left"))
        if pos < 1 or pos > len(mids) - 1:
            raise ValueError(
                f"value {m_j} in dimension {j} encodes to an extreme of the set; "
                "no bracketing midpoint pair exists"
            )
        return float(mids[pos - 1]), float(mids[pos])

    def __repr__(self) -> str:
        kinds = [len(z) for z in self.discrete_sets]
        return f"SearchSpace(n_continuous={self.n_continuous}, discrete_set_sizes={kinds})"
