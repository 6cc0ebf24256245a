"""Margin correction for the Gaussian marginals of discrete coordinates.

After every distribution-parameter update the probability of sampling a
discrete value different from the mean's encoded value must stay at or above
the margin alpha. Two variants are provided: the population correction, which
moves both the mean coordinate and the diagonal correction factor, and the
elitist correction, which adjusts only the correction factor so the
(discretized) mean never moves.

All corrections are pure: they return new values and never mutate inputs.
The covariance matrix, step-size, and continuous coordinates are never
touched by either variant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import chi2_ppf_1dof, norm_cdf, norm_sf
from .space import SearchSpace

__all__ = [
    "MarginInputs",
    "confidence_radius",
    "tail_probabilities",
    "redistribute_tails",
    "correct_interior",
    "correct_edge_population",
    "correct_edge_elitist",
    "apply_margin_population",
    "apply_margin_elitist",
    "validate_alpha",
]

_SYMMETRY_TOL = 1e-12
_DEGENERATE_SQRT_SUM = 1e-12


@dataclass
class MarginInputs:
    """Post-update distribution parameters entering a margin correction.

    A is the positive diagonal correction vector; alpha the margin in
    (0, 0.5). The marginal of coordinate j is Normal(m_j, (sigma*A_j)^2*C_jj).
    """

    m: np.ndarray
    C: np.ndarray
    sigma: float
    A: np.ndarray
    alpha: float

    def __post_init__(self):
        if self.sigma <= 0.0:
            raise ValueError("sigma must be positive")
        if np.any(self.A <= 0.0):
            raise ValueError("all diagonal correction entries must be positive")
        if not 0.0 < self.alpha < 0.5:
            raise ValueError("alpha must lie in (0, 0.5)")

    def marginal_std(self, j: int) -> float:
        return self.sigma * float(self.A[j]) * float(np.sqrt(self.C[j, j]))


def validate_alpha(space: SearchSpace, alpha: float) -> None:
    """Reject margins that make a correction infeasible for this space.

    Interior corrections redistribute three probability masses and need
    alpha < 1/3; spaces whose discrete sets are all binary have no interior
    values and only need alpha < 0.5.
    """
    if not 0.0 < alpha < 0.5:
        raise ValueError(f"margin alpha must lie in (0, 0.5), got {alpha}")
    has_interior = any(len(z) >= 3 for z in space.discrete_sets)
    if has_interior and alpha >= 1.0 / 3.0:
        raise ValueError(
            f"margin alpha must lie in (0, 1/3) for sets with interior values, got {alpha}"
        )


def confidence_radius(inputs: MarginInputs, j: int, gamma: float) -> float:
    """Half-width of the centered gamma-confidence interval of coordinate j."""
    return float(np.sqrt(chi2_ppf_1dof(gamma))) * inputs.marginal_std(j)


def tail_probabilities(
    inputs: MarginInputs, j: int, l_low: float, l_up: float
) -> tuple[float, float]:
    """(Pr(v_j <= l_low), Pr(v_j > l_up)) under the marginal of coordinate j."""
    if l_low >= l_up:
        raise ValueError("l_low must be strictly below l_up")
    s = inputs.marginal_std(j)
    if s <= 0.0 or not np.isfinite(s):
        raise ValueError(f"degenerate marginal in dimension {j}: std {s}")
    m_j = float(inputs.m[j])
    return float(norm_cdf((l_low - m_j) / s)), float(norm_sf((l_up - m_j) / s))


def redistribute_tails(p_low: float, p_up: float, alpha: float) -> tuple[float, float]:
    """Clamp both tails to >= alpha/2 and rescale the excess proportionally.

    Keeps the three masses (low tail, middle, up tail) summing to one while
    guaranteeing both returned tails stay at or above alpha/2.
    """
    p_mid = 1.0 - p_low - p_up
    half = alpha / 2.0
    pl = max(half, p_low)
    pu = max(half, p_up)
    denom = pl + pu + p_mid - 3.0 * half
    if denom <= 0.0:
        raise ValueError(
            f"tail redistribution infeasible: mass {pl + pu + p_mid} <= 3*alpha/2"
        )
    delta = (1.0 - pl - pu - p_mid) / denom
    return pl + delta * (pl - half), pu + delta * (pu - half)


def correct_interior(
    inputs: MarginInputs, j: int, l_low: float, l_up: float
) -> tuple[float, float]:
    """Move (m_j, A_j) so the two tails equal their redistributed targets.

    Returns (m_j_new, A_j_new); the recomputed tails of the new marginal
    match the redistributed pair exactly.
    """
    p_low, p_up = tail_probabilities(inputs, j, l_low, l_up)
    pl, pu = redistribute_tails(p_low, p_up, inputs.alpha)
    sq_low = float(np.sqrt(chi2_ppf_1dof(1.0 - 2.0 * pl)))
    sq_up = float(np.sqrt(chi2_ppf_1dof(1.0 - 2.0 * pu)))
    total = sq_low + sq_up
    if total < _DEGENERATE_SQRT_SUM:
        raise ValueError(f"degenerate interior correction in dimension {j}")
    m_new = (l_low * sq_up + l_up * sq_low) / total
    a_new = (l_up - l_low) / (inputs.sigma * float(np.sqrt(inputs.C[j, j])) * total)
    return m_new, a_new


def correct_edge_population(space: SearchSpace, inputs: MarginInputs, j: int) -> float:
    """Pull m_j toward the nearest midpoint until it enters the confidence
    interval of width CI(1 - 2*alpha); A_j stays unchanged."""
    m_j = float(inputs.m[j])
    mid = space.nearest_midpoint(j, m_j)
    ci = confidence_radius(inputs, j, 1.0 - 2.0 * inputs.alpha)
    dist = m_j - mid
    return mid + np.sign(dist) * min(abs(dist), ci)


def correct_edge_elitist(space: SearchSpace, inputs: MarginInputs, j: int) -> float:
    """Inflate A_j until the nearest midpoint enters the confidence interval;
    m_j is never moved."""
    m_j = float(inputs.m[j])
    mid = space.nearest_midpoint(j, m_j)
    dist = abs(m_j - mid)
    ci = confidence_radius(inputs, j, 1.0 - 2.0 * inputs.alpha)
    if dist <= ci:
        return float(inputs.A[j])
    q = chi2_ppf_1dof(1.0 - 2.0 * inputs.alpha)
    if q <= 0.0:
        raise ValueError("edge correction undefined for alpha >= 0.5")
    return dist / (inputs.sigma * float(np.sqrt(inputs.C[j, j] * q)))


def _gather(space: SearchSpace, m: np.ndarray):
    m = np.asarray(m, dtype=float)
    return space.cell_geometry(m[space.n_continuous :])


def _interior_targets(p_low, p_up, alpha):
    # vectorized redistribute_tails over interior dimensions
    p_mid = 1.0 - p_low - p_up
    half = alpha / 2.0
    pl = np.maximum(half, p_low)
    pu = np.maximum(half, p_up)
    denom = pl + pu + p_mid - 3.0 * half
    if np.any(denom <= 0.0):
        raise ValueError("tail redistribution infeasible: total mass <= 3*alpha/2")
    delta = (1.0 - pl - pu - p_mid) / denom
    return pl + delta * (pl - half), pu + delta * (pu - half)


def apply_margin_population(
    space: SearchSpace, inputs: MarginInputs
) -> tuple[np.ndarray, np.ndarray]:
    """Population margin correction over all discrete dimensions.

    Edge dimensions move the mean coordinate only; interior dimensions move
    both the mean coordinate and A. Returns (m_new, A_new).
    """
    m = np.array(inputs.m, dtype=float)
    a = np.array(inputs.A, dtype=float)
    if space.n_discrete == 0:
        return m, a

    disc = space.discrete_indices
    edge, l_near, l_low, l_up = _gather(space, m)
    m_d = m[disc]
    s_d = inputs.sigma * a[disc] * np.sqrt(np.diag(inputs.C)[disc])
    if np.any(s_d <= 0.0) or not np.all(np.isfinite(s_d)):
        raise ValueError("degenerate marginal: nonpositive or nonfinite std")

    if np.any(edge):
        ci = float(np.sqrt(chi2_ppf_1dof(1.0 - 2.0 * inputs.alpha))) * s_d[edge]
        dist = m_d[edge] - l_near[edge]
        m_d[edge] = l_near[edge] + np.sign(dist) * np.minimum(np.abs(dist), ci)

    interior = ~edge
    if np.any(interior):
        lo, up = l_low[interior], l_up[interior]
        s_i = s_d[interior]
        m_i = m_d[interior]
        p_low = norm_cdf((lo - m_i) / s_i)
        p_up = norm_sf((up - m_i) / s_i)
        pl, pu = _interior_targets(p_low, p_up, inputs.alpha)
        sq_low = np.sqrt(chi2_ppf_1dof(1.0 - 2.0 * pl))
        sq_up = np.sqrt(chi2_ppf_1dof(1.0 - 2.0 * pu))
        total = sq_low + sq_up
        if np.any(total < _DEGENERATE_SQRT_SUM):
            raise ValueError("degenerate interior correction")
        m_d[interior] = (lo * sq_up + up * sq_low) / total
        c_i = np.diag(inputs.C)[disc][interior]
        a[disc[interior]] = (up - lo) / (inputs.sigma * np.sqrt(c_i) * total)

    m[disc] = m_d
    return m, a


def apply_margin_elitist(space: SearchSpace, inputs: MarginInputs) -> np.ndarray:
    """Elitist margin correction: adjusts A only, the mean is never moved.

    Requires the discrete coordinates of the mean to be admissible values;
    interior dimensions then have exactly symmetric tails and reuse the
    population A update, which leaves the mean fixed.
    """
    a = np.array(inputs.A, dtype=float)
    if space.n_discrete == 0:
        return a

    disc = space.discrete_indices
    edge, l_near, l_low, l_up = _gather(space, inputs.m)
    m_d = np.asarray(inputs.m, dtype=float)[disc]
    c_d = np.diag(inputs.C)[disc]
    s_d = inputs.sigma * a[disc] * np.sqrt(c_d)
    if np.any(s_d <= 0.0) or not np.all(np.isfinite(s_d)):
        raise ValueError("degenerate marginal: nonpositive or nonfinite std")

    q_alpha = float(chi2_ppf_1dof(1.0 - 2.0 * inputs.alpha))
    if np.any(edge):
        dist = np.abs(m_d[edge] - l_near[edge])
        ci = np.sqrt(q_alpha) * s_d[edge]
        grow = dist > ci
        if np.any(grow):
            idx = disc[edge][grow]
            a[idx] = dist[grow] / (inputs.sigma * np.sqrt(c_d[edge][grow] * q_alpha))

    interior = ~edge
    if np.any(interior):
        lo, up = l_low[interior], l_up[interior]
        s_i = s_d[interior]
        m_i = m_d[interior]
        p_low = norm_cdf((lo - m_i) / s_i)
        p_up = norm_sf((up - m_i) / s_i)
        if np.any(np.abs(p_low - p_up) > _SYMMETRY_TOL):
            raise ValueError(
                "elitist margin correction requires symmetric tails; "
                "the mean must hold admissible values on evenly spaced sets"
            )
        pl, _ = _interior_targets(p_low, p_low, inputs.alpha)
        sq = np.sqrt(chi2_ppf_1dof(1.0 - 2.0 * pl))
        if np.any(2.0 * sq < _DEGENERATE_SQRT_SUM):
            raise ValueError("degenerate interior correction")
        c_i = c_d[interior]
        a[disc[interior]] = (up - lo) / (inputs.sigma * np.sqrt(c_i) * 2.0 * sq)

    return a
