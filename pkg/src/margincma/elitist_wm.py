"""(1+1) elitist CMA-ES with margin.

One candidate per iteration, accepted when not worse than the incumbent.
Step-size follows a smoothed success rule; the covariance is adapted by a
rank-one update on success. The mean holds the encoded elitist solution, so
the margin correction only inflates the diagonal correction factors and never
moves the mean. On fully discrete domains a sigma/A rescaling runs each
iteration to keep the state away from floating-point underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .margin import (
    MarginInputs,
    apply_margin_elitist,
    apply_margin_population,
    validate_alpha,
)
from .numerics import factor_sqrt, min_eigenvalue, symmetrize
from .rng import RandomStream
from .space import SearchSpace

__all__ = [
    "ElitistHyperparams",
    "default_elitist_hyperparams",
    "postprocess_discrete",
    "OnePlusOneCmaWithMargin",
]


@dataclass
class ElitistHyperparams:
    """Success-rule and covariance constants for the (1+1) algorithm."""

    d_sigma: float
    p_target: float
    c_p: float
    c_c: float
    c_1: float
    p_thresh: float
    alpha: float

    def __post_init__(self):
        if self.d_sigma <= 0.0:
            raise ValueError("d_sigma must be positive")
        for name in ("p_target", "p_thresh"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ValueError(f"{name} must lie in (0, 1)")
        for name in ("c_p", "c_c", "c_1"):
            if not 0.0 < getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1]")
        # the strict space-dependent bound (< 0.5, or < 1/3 with interior
        # values) is enforced at optimizer construction where the space is known
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")


def default_elitist_hyperparams(dim: int) -> ElitistHyperparams:
    """Recommended setting: success-rule constants are dimension-free, the
    covariance rates and margin scale with the dimension."""
    if dim < 1:
        raise ValueError("dimension must be >= 1")
    return ElitistHyperparams(
        d_sigma=1.0 + dim / 2.0,
        p_target=2.0 / 11.0,
        c_p=1.0 / 12.0,
        c_c=2.0 / (dim + 2.0),
        c_1=2.0 / (dim**2 + 6.0),
        p_thresh=0.44,
        alpha=1.0 / dim,
    )


def postprocess_discrete(sigma: float, a: np.ndarray) -> tuple[float, np.ndarray]:
    """Shift scale from A into sigma: sigma*A_j is preserved per coordinate
    and min(A) becomes exactly one."""
    a_min = float(np.min(a))
    return sigma * a_min, a / a_min


def _chol_rank_one_update(factor: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Lower-triangular factor of L@L.T + v@v.T, updated in O(n^2)."""
    out = factor.copy()
    work = v.copy()
    n = out.shape[0]
    for k in range(n):
        lkk = out[k, k]
        r = math.hypot(lkk, work[k])
        c = r / lkk
        s = work[k] / lkk
        out[k, k] = r
        if k + 1 < n:
            col = (out[k + 1 :, k] + s * work[k + 1 :]) / c
            out[k + 1 :, k] = col
            work[k + 1 :] = c * work[k + 1 :] - s * col
    return out


class OnePlusOneCmaWithMargin:
    """Ask/tell elitist optimizer minimizing over a mixed-integer space.

    The first ask/tell round evaluates the encoded initial mean and installs
    it as the incumbent; every later round is one sample. Args mirror
    CmaWithMargin, plus:

        discretize_mean: keep the mean on admissible discrete values (the
            default). When False the raw accepted sample becomes the mean and
            the mean-moving population margin correction is used instead.
        factor_updates: maintain the covariance factor by O(n^2) rank-one
            updates instead of refactorizing after each accepted sample.
    """

    ask_size = 1

    def __init__(
        self,
        space: SearchSpace,
        m0,
        sigma0: float = 1.0,
        hyper: ElitistHyperparams | None = None,
        seed: int = 0,
        stream: RandomStream | None = None,
        postprocess: bool = True,
        discretize_mean: bool = True,
        factor_updates: bool = False,
    ):
        self.space = space
        n = space.dim
        self.hyper = default_elitist_hyperparams(n) if hyper is None else hyper
        if space.n_discrete:
            validate_alpha(space, self.hyper.alpha)
        if discretize_mean:
            for s in range(space.n_discrete):
                j = space.n_continuous + s
                if len(space.discrete_sets[s]) >= 3 and not space.is_evenly_spaced(j):
                    raise ValueError(
                        f"discrete set of dimension {j} is unevenly spaced; the "
                        "elitist margin correction requires even spacing "
                        "(remap the values to an evenly spaced set first)"
                    )
        self.stream = RandomStream(seed) if stream is None else stream
        self.discretize_mean = discretize_mean
        self.factor_updates = factor_updates

        m0 = np.asarray(m0, dtype=float)
        if m0.shape != (n,):
            raise ValueError(f"m0 must have shape ({n},)")
        if sigma0 <= 0.0:
            raise ValueError("sigma0 must be positive")

        self._m = space.encode(m0)
        self._C = np.eye(n)
        self._sigma = float(sigma0)
        self._A = np.ones(n)
        self._p_c = np.zeros(n)
        self._p_succ = self.hyper.p_target
        self.f_best = None
        self._t = 0
        self._factor: np.ndarray | None = np.eye(n)
        self._min_eig: float | None = 1.0
        self._pending = None

        self._post_mode = "rescale" if postprocess and space.fully_discrete else "none"

    # -- read-only state ----------------------------------------------------

    @property
    def mean(self) -> np.ndarray:
        return self._m.copy()

    @property
    def sigma(self) -> float:
        return self._sigma

    @property
    def cov(self) -> np.ndarray:
        return self._C.copy()

    @property
    def corrections(self) -> np.ndarray:
        return self._A.copy()

    @property
    def success_rate(self) -> float:
        return self._p_succ

    @property
    def iteration(self) -> int:
        return self._t

    def marginal_stds(self) -> np.ndarray:
        return self._sigma * self._A * np.sqrt(np.diag(self._C))

    def scaled_min_eigenvalue(self) -> float:
        if self._min_eig is None:
            self._min_eig = min_eigenvalue(self._C)
        return self._sigma**2 * self._min_eig

    # -- ask/tell -------------------------------------------------------------

    def ask(self) -> list[np.ndarray]:
        """One feasible candidate; the very first call returns the encoded
        initial mean for the incumbent evaluation."""
        if self._pending is not None:
            raise RuntimeError("ask() called twice without tell()")
        if self.f_best is None:
            self._pending = ("init",)
            return [self._m.copy()]
        if self._factor is None:
            self._factor = factor_sqrt(self._C)
        xi = self.stream.normal_vector(self.space.dim)
        y = self._factor @ xi
        v = self._m + self._sigma * (self._A * y)
        v_bar = self.space.encode(v)
        self._pending = ("sample", y, v, v_bar)
        return [v_bar.copy()]

    def tell(self, values) -> None:
        if self._pending is None:
            raise RuntimeError("tell() called before ask()")
        if len(values) != 1:
            raise ValueError("expected exactly one fitness value")
        pending, self._pending = self._pending, None
        (value,) = values

        if pending[0] == "init":
            self.f_best = value
            return

        _, y, v, v_bar = pending
        h = self.hyper
        success = value <= self.f_best

        self._p_succ = (1.0 - h.c_p) * self._p_succ + h.c_p * (1.0 if success else 0.0)
        self._sigma *= math.exp(
            (self._p_succ - h.p_target) / (h.d_sigma * (1.0 - h.p_target))
        )

        if success:
            self._m = v_bar.copy() if self.discretize_mean else v.copy()
            self.f_best = value
            hs = 1.0 if self._p_succ < h.p_thresh else 0.0
            self._p_c = (1.0 - h.c_c) * self._p_c + hs * math.sqrt(
                h.c_c * (2.0 - h.c_c)
            ) * y
            decay = 1.0 - h.c_1 + (1.0 - hs) * h.c_1 * h.c_c * (2.0 - h.c_c)
            self._C = symmetrize(decay * self._C + h.c_1 * np.outer(self._p_c, self._p_c))
            if self.factor_updates and self._factor is not None:
                self._factor = _chol_rank_one_update(
                    math.sqrt(decay) * self._factor, math.sqrt(h.c_1) * self._p_c
                )
            else:
                self._factor = None
            self._min_eig = None

        if self.space.n_discrete:
            inputs = MarginInputs(
                m=self._m, C=self._C, sigma=self._sigma, A=self._A, alpha=h.alpha
            )
            if self.discretize_mean:
                self._A = apply_margin_elitist(self.space, inputs)
            else:
                self._m, self._A = apply_margin_population(self.space, inputs)

        if self._post_mode == "rescale":
            self._sigma, self._A = postprocess_discrete(self._sigma, self._A)

        self._t += 1
