import math

import numpy as np
import pytest

from margincma.cma_wm import (
    CmaWithMargin,
    PopulationHyperparams,
    binary_postprocess,
    default_population_hyperparams,
)
from margincma.rng import RandomStream
from margincma.space import SearchSpace


def phi(x):
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def flip_probability(space, j, m_j, s_j):
    mids = space.midpoints[j - space.n_continuous]
    k = space.encode_index(j, m_j)
    lower = mids[k - 1] if k > 0 else -math.inf
    upper = mids[k] if k < len(mids) else math.inf
    return 1.0 - (phi((upper - m_j) / s_j) - phi((lower - m_j) / s_j))


def sphere(v):
    return float(np.sum(np.square(v)))


class TestDefaultHyperparams:
    def test_population_size_and_margin(self):
        h = default_population_hyperparams(10)
        assert h.lam == 10
        assert h.mu == 5
        assert h.alpha == pytest.approx(0.01)
        assert default_population_hyperparams(20).lam == 12

    def test_weight_normalization(self):
        for n in (2, 5, 10, 40, 100):
            h = default_population_hyperparams(n)
            assert np.sum(h.weights[: h.mu]) == pytest.approx(1.0, abs=1e-12)
            assert h.mu_w * np.sum(h.weights[: h.mu] ** 2) == pytest.approx(1.0, abs=1e-9)
            assert np.all(np.diff(h.weights) <= 1e-15)
            assert np.all(h.weights[: h.mu] > 0)
            assert np.all(h.weights[h.mu :] <= 0)

    def test_rates_in_range(self):
        for n in (2, 10, 60):
            h = default_population_hyperparams(n)
            for rate in (h.c_m, h.c_sigma, h.c_c, h.c_1, h.c_mu):
                assert 0.0 < rate <= 1.0
            assert h.d_sigma >= 1.0
            assert 0.0 < h.alpha < 1.0 / 3.0

    def test_covariance_decay_stays_positive(self):
        # total decay multiplier on C must keep the matrix positive definite
        for n in (2, 5, 10, 40, 100):
            h = default_population_hyperparams(n)
            assert h.c_1 + h.c_mu * float(np.sum(np.abs(h.weights))) < 1.0


def custom_two_sample_hyper():
    return PopulationHyperparams(
        lam=2,
        mu=1,
        weights=np.array([1.0, 0.0]),
        mu_w=1.0,
        c_m=1.0,
        c_sigma=0.2,
        d_sigma=1.2,
        c_c=0.3,
        c_1=0.1,
        c_mu=0.1,
        alpha=0.05,
    )


class TestStep:
    def test_zero_draws_leave_mean_fixed(self, monkeypatch):
        space = SearchSpace.continuous(4)
        opt = CmaWithMargin(space, np.full(4, 0.7), sigma0=1.5, seed=1)
        opt._p_sigma = np.full(4, 0.3)
        monkeypatch.setattr(
            opt.stream, "normal_matrix", lambda r, c: np.zeros((r, c))
        )
        h = opt.hyper
        expected_ps = (1.0 - h.c_sigma) * np.full(4, 0.3)
        norm = float(np.linalg.norm(expected_ps))
        expected_sigma = 1.5 * math.exp(
            (h.c_sigma / h.d_sigma) * (norm / opt._chi_n - 1.0)
        )
        points = opt.ask()
        opt.tell([sphere(p) for p in points])
        assert np.array_equal(opt.mean, np.full(4, 0.7))
        assert np.allclose(opt.path_sigma, expected_ps, rtol=1e-15)
        assert opt.sigma == pytest.approx(expected_sigma, rel=1e-14)

    def test_single_parent_recombination(self):
        space = SearchSpace.continuous(3)
        opt = CmaWithMargin(
            space, np.zeros(3), sigma0=1.0, hyper=custom_two_sample_hyper(), seed=3
        )
        points = opt.ask()
        values = [sphere(p) for p in points]
        best = points[0] if values[0] <= values[1] else points[1]
        opt.tell(values)
        assert np.allclose(opt.mean, best, rtol=1e-14)

    def test_straight_line_oracle_one_step(self):
        n, seed, sigma0 = 4, 5, 0.8
        space = SearchSpace.continuous(n)
        m0 = np.full(n, 0.5)
        opt = CmaWithMargin(space, m0, sigma0=sigma0, seed=seed)
        h = opt.hyper
        points = opt.ask()
        values = [sphere(p) for p in points]
        opt.tell(values)

        # independent straight-line recomputation from the same seed
        stream = RandomStream(seed)
        xi = stream.normal_matrix(h.lam, n)
        y = xi.copy()  # C0 = I
        x = m0 + sigma0 * y
        assert np.allclose(np.stack(points), x, rtol=1e-15)
        order = sorted(range(h.lam), key=lambda i: (values[i], i))

        m1 = m0.copy()
        for rank in range(h.mu):
            m1 = m1 + h.c_m * h.weights[rank] * (x[order[rank]] - m0)

        ps = np.zeros(n)
        for rank in range(h.mu):
            ps = ps + h.weights[rank] * xi[order[rank]]
        ps = math.sqrt(h.c_sigma * (2 - h.c_sigma) * h.mu_w) * ps
        norm_ps = math.sqrt(float(np.sum(ps**2)))
        chi_n = math.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n * n))
        h_sig = (
            1.0
            if norm_ps / math.sqrt(1 - (1 - h.c_sigma) ** 2) < (1.4 + 2 / (n + 1)) * chi_n
            else 0.0
        )
        pc = np.zeros(n)
        for rank in range(h.mu):
            pc = pc + h.weights[rank] * y[order[rank]]
        pc = h_sig * math.sqrt(h.c_c * (2 - h.c_c) * h.mu_w) * pc

        c1 = (
            1
            - h.c_mu * float(np.sum(h.weights))
            - h.c_1
            + (1 - h_sig) * h.c_1 * h.c_c * (2 - h.c_c)
        ) * np.eye(n)
        for rank in range(h.lam):
            w = h.weights[rank]
            if w < 0:
                w = w * n / float(np.sum(xi[order[rank]] ** 2))
            c1 = c1 + h.c_mu * w * np.outer(y[order[rank]], y[order[rank]])
        c1 = c1 + h.c_1 * np.outer(pc, pc)
        sigma1 = sigma0 * math.exp((h.c_sigma / h.d_sigma) * (norm_ps / chi_n - 1))

        assert np.allclose(opt.mean, m1, rtol=1e-12)
        assert np.allclose(opt.path_sigma, ps, rtol=1e-12)
        assert np.allclose(opt.path_c, pc, rtol=1e-12)
        assert np.allclose(opt.cov, (c1 + c1.T) / 2, rtol=1e-12)
        assert opt.sigma == pytest.approx(sigma1, rel=1e-12)

    def test_continuous_space_keeps_corrections_identity(self):
        space = SearchSpace.continuous(5)
        opt = CmaWithMargin(space, np.ones(5), seed=7)
        for _ in range(20):
            points = opt.ask()
            opt.tell([sphere(p) for p in points])
        assert np.array_equal(opt.corrections, np.ones(5))

    def test_margin_invariant_after_steps(self):
        space = SearchSpace(2, [[0.0, 1.0]] * 3 + [list(range(-10, 11))] * 3)
        opt = CmaWithMargin(space, np.full(8, 0.4), seed=11, postprocess=False)
        alpha = opt.hyper.alpha
        for _ in range(40):
            points = opt.ask()
            opt.tell([sphere(p) for p in points])
            stds = opt.marginal_stds()
            m = opt.mean
            for j in space.discrete_indices:
                assert flip_probability(space, j, m[j], stds[j]) >= alpha - 1e-9

    def test_binary_domain_resets_sigma_each_iteration(self):
        space = SearchSpace.binary(6)
        opt = CmaWithMargin(space, np.full(6, 0.5), seed=13)
        for _ in range(10):
            points = opt.ask()
            opt.tell([-float(np.sum(p)) for p in points])
            assert opt.sigma == 1.0

    def test_integer_domain_rescales_corrections(self):
        space = SearchSpace.integer_range(4, -10, 10)
        opt = CmaWithMargin(space, np.full(4, 2.0), seed=17)
        for _ in range(10):
            points = opt.ask()
            opt.tell([sphere(p) for p in points])
            assert np.min(opt.corrections) == 1.0

    def test_deterministic_under_seed(self):
        space = SearchSpace.integer_range(3, -10, 10, n_continuous=2)

        def run():
            opt = CmaWithMargin(space, np.full(5, 1.5), seed=23)
            for _ in range(15):
                points = opt.ask()
                opt.tell([sphere(p) for p in points])
            return opt.mean, opt.sigma, opt.cov

        m1, s1, c1 = run()
        m2, s2, c2 = run()
        assert np.array_equal(m1, m2) and s1 == s2 and np.array_equal(c1, c2)


class TestAskTellProtocol:
    def test_double_ask_rejected(self):
        opt = CmaWithMargin(SearchSpace.continuous(2), np.zeros(2), seed=1)
        opt.ask()
        with pytest.raises(RuntimeError):
            opt.ask()

    def test_tell_before_ask_rejected(self):
        opt = CmaWithMargin(SearchSpace.continuous(2), np.zeros(2), seed=1)
        with pytest.raises(RuntimeError):
            opt.tell([1.0] * opt.population_size)

    def test_wrong_value_count_rejected(self):
        opt = CmaWithMargin(SearchSpace.continuous(2), np.zeros(2), seed=1)
        opt.ask()
        with pytest.raises(ValueError):
            opt.tell([1.0])

    def test_candidates_are_feasible(self):
        space = SearchSpace.integer_range(3, -10, 10, n_continuous=1)
        opt = CmaWithMargin(space, np.full(4, 1.2), seed=29)
        for point in opt.ask():
            encoded = space.encode(point)
            assert np.array_equal(point, encoded)


class TestBinaryPostprocess:
    def test_identity_at_sigma_one(self):
        space = SearchSpace.binary(3)
        m = np.array([0.2, 0.7, 1.4])
        m2, s2 = binary_postprocess(space, m, 1.0)
        assert np.array_equal(m2, m) and s2 == 1.0

    def test_offsets_rescaled(self):
        space = SearchSpace.binary(1)
        m2, s2 = binary_postprocess(space, np.array([1.5]), 2.0)
        assert m2[0] == pytest.approx(1.0)
        assert s2 == 1.0
        # standardized offset (m - midpoint)/sigma preserved
        assert (1.5 - 0.5) / 2.0 == pytest.approx((m2[0] - 0.5) / s2)

    def test_encoded_distribution_preserved(self):
        space = SearchSpace.binary(4)
        rng = np.random.default_rng(31)
        for _ in range(200):
            m = rng.uniform(-2, 3, size=4)
            sigma = 10.0 ** rng.uniform(-2, 2)
            a = 10.0 ** rng.uniform(-1, 1, size=4)
            c_diag = 10.0 ** rng.uniform(-1, 1, size=4)
            m2, s2 = binary_postprocess(space, m, sigma)
            z_before = (0.5 - m) / (sigma * a * np.sqrt(c_diag))
            z_after = (0.5 - m2) / (s2 * a * np.sqrt(c_diag))
            before = [phi(z) for z in z_before]
            after = [phi(z) for z in z_after]
            assert np.allclose(before, after, atol=1e-12)

    def test_rejects_non_binary_domain(self):
        with pytest.raises(ValueError):
            binary_postprocess(SearchSpace.integer_range(2, 0, 5), np.zeros(2), 1.0)
