"""Weighted-recombination CMA-ES with margin correction.

Each iteration samples lambda candidates, evaluates their encoded feasible
points, updates mean/paths/covariance/step-size from the ranking, then applies
the population margin correction. On fully discrete domains an exact
reparameterization runs after the correction to keep the floating-point state
away from underflow without changing the sampling distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .elitist_wm import postprocess_discrete
from .margin import MarginInputs, apply_margin_population, validate_alpha
from .numerics import expected_chi_norm, factor_sqrt, min_eigenvalue, symmetrize
from .rng import RandomStream
from .space import SearchSpace

__all__ = [
    "PopulationHyperparams",
    "default_population_hyperparams",
    "CmaWithMargin",
    "binary_postprocess",
]


@dataclass
class PopulationHyperparams:
    """Learning rates, weights, and margin for the population algorithm."""

    lam: int
    mu: int
    weights: np.ndarray
    mu_w: float
    c_m: float
    c_sigma: float
    d_sigma: float
    c_c: float
    c_1: float
    c_mu: float
    alpha: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(w) != self.lam or not 1 <= self.mu <= self.lam:
            raise ValueError("weights must have length lam with 1 <= mu <= lam")
        if np.any(np.diff(w) > 1e-12):
            raise ValueError("weights must be non-increasing")
        if np.any(w[: self.mu] <= 0.0) or abs(np.sum(w[: self.mu]) - 1.0) > 1e-9:
            raise ValueError("the mu positive weights must sum to one")
        if np.any(w[self.mu :] > 0.0):
            raise ValueError("weights beyond mu must be <= 0")
        if abs(self.mu_w - 1.0 / float(np.sum(w[: self.mu] ** 2))) > 1e-6 * self.mu_w:
            raise ValueError("mu_w must be the inverse sum of squared positive weights")
        for rate in (self.c_m, self.c_sigma, self.c_c, self.c_1, self.c_mu):
            if not 0.0 < rate <= 1.0:
                raise ValueError("learning rates must lie in (0, 1]")
        if self.d_sigma <= 0.0:
            raise ValueError("d_sigma must be positive")
        if not 0.0 < self.alpha < 1.0 / 3.0:
            raise ValueError("alpha must lie in (0, 1/3)")


def default_population_hyperparams(dim: int) -> PopulationHyperparams:
    """Standard tutorial defaults with active (negative-weight) covariance
    adaptation; the margin defaults to 1/(lambda*dim)."""
    if dim < 2:
        raise ValueError("dimension must be >= 2")
    n = dim
    lam = 4 + math.floor(3 * math.log(n))
    mu = lam // 2
    w_prime = np.array([math.log((lam + 1) / 2) - math.log(i + 1) for i in range(lam)])

    positive = w_prime[:mu]
    mu_w = float(np.sum(positive) ** 2 / np.sum(positive**2))
    negative = w_prime[mu:]
    mu_w_neg = float(np.sum(negative) ** 2 / np.sum(negative**2))

    c_sigma = (mu_w + 2.0) / (n + mu_w + 5.0)
    d_sigma = 1.0 + 2.0 * max(0.0, math.sqrt((mu_w - 1.0) / (n + 1.0)) - 1.0) + c_sigma
    c_c = (4.0 + mu_w / n) / (n + 4.0 + 2.0 * mu_w / n)
    c_1 = 2.0 / ((n + 1.3) ** 2 + mu_w)
    c_mu = min(1.0 - c_1, 2.0 * (mu_w - 2.0 + 1.0 / mu_w) / ((n + 2.0) ** 2 + mu_w))

    scale_neg = min(
        1.0 + c_1 / c_mu,
        1.0 + 2.0 * mu_w_neg / (mu_w + 2.0),
        (1.0 - c_1 - c_mu) / (n * c_mu),
    )
    weights = np.empty(lam)
    weights[:mu] = positive / np.sum(positive)
    weights[mu:] = scale_neg * negative / np.sum(np.abs(negative))

    return PopulationHyperparams(
        lam=lam,
        mu=mu,
        weights=weights,
        mu_w=mu_w,
        c_m=1.0,
        c_sigma=c_sigma,
        d_sigma=d_sigma,
        c_c=c_c,
        c_1=c_1,
        c_mu=c_mu,
        alpha=1.0 / (lam * n),
    )


def binary_postprocess(
    space: SearchSpace, m: np.ndarray, sigma: float
) -> tuple[np.ndarray, float]:
    """Rescale mean offsets by 1/sigma and reset sigma to one.

    Only valid on fully binary domains; each coordinate's standardized offset
    (m_j - midpoint)/sigma is preserved, so the sampling distribution of the
    encoded candidates is unchanged.
    """
    if not (space.fully_discrete and space.all_binary):
        raise ValueError("binary post-process requires a fully binary domain")
    mids = np.array([float(mids[0]) for mids in space.midpoints])
    return (m - mids) / sigma + mids, 1.0


@dataclass
class _Pending:
    xi: np.ndarray
    y: np.ndarray
    x: np.ndarray


class CmaWithMargin:
    """Ask/tell optimizer minimizing over a mixed-integer search space.

    Args:
        space: search-space description.
        m0: initial mean vector (length space.dim).
        sigma0: initial step-size.
        hyper: hyperparameters; defaults per the dimension.
        seed: stream seed (ignored when an explicit stream is given).
        stream: random stream to draw from.
        postprocess: apply the discrete-domain reparameterization after each
            margin correction (binary transform on fully binary domains, the
            sigma/A rescaling on other fully discrete domains).
    """

    def __init__(
        self,
        space: SearchSpace,
        m0,
        sigma0: float = 1.0,
        hyper: PopulationHyperparams | None = None,
        seed: int = 0,
        stream: RandomStream | None = None,
        postprocess: bool = True,
    ):
        self.space = space
        n = space.dim
        self.hyper = default_population_hyperparams(n) if hyper is None else hyper
        if space.n_discrete:
            validate_alpha(space, self.hyper.alpha)
        self.stream = RandomStream(seed) if stream is None else stream

        m0 = np.asarray(m0, dtype=float)
        if m0.shape != (n,):
            raise ValueError(f"m0 must have shape ({n},)")
        if sigma0 <= 0.0:
            raise ValueError("sigma0 must be positive")

        self._m = m0.copy()
        self._C = np.eye(n)
        self._sigma = float(sigma0)
        self._A = np.ones(n)
        self._p_sigma = np.zeros(n)
        self._p_c = np.zeros(n)
        self._t = 0
        self._chi_n = expected_chi_norm(n)
        self._pending: _Pending | None = None

        if not postprocess or not space.fully_discrete:
            self._post_mode = "none"
        elif space.all_binary:
            self._post_mode = "binary"
        else:
            self._post_mode = "rescale"

    # -- read-only state ----------------------------------------------------

    @property
    def population_size(self) -> int:
        return self.hyper.lam

    ask_size = population_size

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
    def path_sigma(self) -> np.ndarray:
        return self._p_sigma.copy()

    @property
    def path_c(self) -> np.ndarray:
        return self._p_c.copy()

    @property
    def iteration(self) -> int:
        return self._t

    def marginal_stds(self) -> np.ndarray:
        return self._sigma * self._A * np.sqrt(np.diag(self._C))

    def scaled_min_eigenvalue(self) -> float:
        return self._sigma**2 * min_eigenvalue(self._C)

    # -- ask/tell -------------------------------------------------------------

    def ask(self) -> list[np.ndarray]:
        """Sample lambda feasible candidate points."""
        if self._pending is not None:
            raise RuntimeError("ask() called twice without tell()")
        lam, n = self.hyper.lam, self.space.dim
        factor = factor_sqrt(self._C)
        xi = self.stream.normal_matrix(lam, n)
        y = xi @ factor.T
        x = self._m + self._sigma * y
        v = self._m + self._sigma * (self._A * y)
        self._pending = _Pending(xi=xi, y=y, x=x)
        v_bar = self.space.encode(v)
        return [row for row in v_bar]

    def tell(self, values) -> None:
        """Advance the state from the fitness values of the last ask()."""
        if self._pending is None:
            raise RuntimeError("tell() called before ask()")
        h = self.hyper
        if len(values) != h.lam:
            raise ValueError(f"expected {h.lam} fitness values, got {len(values)}")
        pending, self._pending = self._pending, None

        order = sorted(range(h.lam), key=lambda i: (values[i], i))
        xi = pending.xi[order]
        y = pending.y[order]
        x = pending.x[order]

        w_pos = h.weights[: h.mu]
        m_new = self._m + h.c_m * (w_pos @ (x[: h.mu] - self._m))

        self._p_sigma = (1.0 - h.c_sigma) * self._p_sigma + math.sqrt(
            h.c_sigma * (2.0 - h.c_sigma) * h.mu_w
        ) * (w_pos @ xi[: h.mu])
        norm_ps = float(np.linalg.norm(self._p_sigma))

        normalizer = math.sqrt(1.0 - (1.0 - h.c_sigma) ** (2 * (self._t + 1)))
        h_sigma = (
            1.0
            if norm_ps / normalizer < (1.4 + 2.0 / (self.space.dim + 1.0)) * self._chi_n
            else 0.0
        )

        self._p_c = (1.0 - h.c_c) * self._p_c + h_sigma * math.sqrt(
            h.c_c * (2.0 - h.c_c) * h.mu_w
        ) * (w_pos @ y[: h.mu])

        w_circ = h.weights.copy()
        negative = h.weights < 0.0
        if np.any(negative):
            sq_norms = np.sum(xi[negative] ** 2, axis=1)
            # a zero draw contributes nothing to the rank-mu sum either way
            safe = np.where(sq_norms > 0.0, sq_norms, 1.0)
            w_circ[negative] = np.where(
                sq_norms > 0.0, h.weights[negative] * self.space.dim / safe, 0.0
            )

        decay = (
            1.0
            - h.c_mu * float(np.sum(h.weights))
            - h.c_1
            + (1.0 - h_sigma) * h.c_1 * h.c_c * (2.0 - h.c_c)
        )
        rank_mu = y.T @ (w_circ[:, None] * y)
        rank_one = np.outer(self._p_c, self._p_c)
        self._C = symmetrize(decay * self._C + h.c_mu * rank_mu + h.c_1 * rank_one)

        self._sigma *= math.exp((h.c_sigma / h.d_sigma) * (norm_ps / self._chi_n - 1.0))

        self._m = m_new
        if self.space.n_discrete:
            inputs = MarginInputs(
                m=self._m, C=self._C, sigma=self._sigma, A=self._A, alpha=h.alpha
            )
            self._m, self._A = apply_margin_population(self.space, inputs)

        if self._post_mode == "binary":
            self._m, self._sigma = binary_postprocess(self.space, self._m, self._sigma)
        elif self._post_mode == "rescale":
            self._sigma, self._A = postprocess_discrete(self._sigma, self._A)

        self._t += 1
