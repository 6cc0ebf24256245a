import math

import numpy as np
import pytest

from margincma.elitist_wm import (
    OnePlusOneCmaWithMargin,
    default_elitist_hyperparams,
    postprocess_discrete,
)
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


def drive(opt, objective, iterations):
    for _ in range(iterations):
        (point,) = opt.ask()
        opt.tell([objective(point)])


class TestDefaultHyperparams:
    def test_recommended_values(self):
        h = default_elitist_hyperparams(20)
        assert h.d_sigma == 11.0
        assert h.p_target == pytest.approx(2.0 / 11.0)
        assert h.c_p == pytest.approx(1.0 / 12.0)
        assert h.c_c == pytest.approx(2.0 / 22.0)
        assert h.c_1 == pytest.approx(2.0 / 406.0)
        assert h.p_thresh == 0.44
        assert h.alpha == pytest.approx(1.0 / 20.0)


class TestInit:
    def test_binary_mean_encoded_and_evaluated(self):
        space = SearchSpace.binary(4)
        opt = OnePlusOneCmaWithMargin(space, np.full(4, 0.5), seed=1)
        assert np.array_equal(opt.mean, np.zeros(4))
        (first,) = opt.ask()
        assert np.array_equal(first, np.zeros(4))
        opt.tell([7.0])
        assert opt.f_best == 7.0
        assert opt.iteration == 0

    def test_continuous_mean_unchanged(self):
        space = SearchSpace.continuous(3)
        m0 = np.array([0.3, -1.2, 9.9])
        opt = OnePlusOneCmaWithMargin(space, m0, seed=1)
        assert np.array_equal(opt.mean, m0)

    def test_initial_success_rate_is_target(self):
        opt = OnePlusOneCmaWithMargin(SearchSpace.continuous(2), np.zeros(2), seed=1)
        assert opt.success_rate == pytest.approx(2.0 / 11.0)

    def test_uneven_interior_set_rejected(self):
        uneven = SearchSpace(0, [[0.0, 1.0, 5.0]] * 4)
        with pytest.raises(ValueError, match="evenly spaced"):
            OnePlusOneCmaWithMargin(uneven, np.zeros(4), seed=1)
        # binary pairs carry no interior values, so any two-point set is fine
        OnePlusOneCmaWithMargin(SearchSpace(0, [[0.0, 7.0]] * 4), np.zeros(4), seed=1)

    def test_uneven_set_allowed_without_mean_discretization(self):
        uneven = SearchSpace(0, [[0.0, 1.0, 5.0]] * 4)
        OnePlusOneCmaWithMargin(uneven, np.zeros(4), seed=1, discretize_mean=False)


class TestSuccessRule:
    def make(self, n=20):
        space = SearchSpace.continuous(n)
        opt = OnePlusOneCmaWithMargin(space, np.zeros(n), seed=2)
        opt.ask()
        opt.tell([100.0])
        return opt

    def test_success_update_exact_fraction(self):
        opt = self.make()
        opt.ask()
        opt.tell([50.0])
        assert opt.success_rate == pytest.approx(0.25, abs=1e-15)

    def test_sigma_multiplier_at_full_success(self):
        opt = self.make(n=20)
        opt._p_succ = 1.0
        sigma_before = opt.sigma
        opt.ask()
        opt.tell([0.0])
        assert opt.success_rate == 1.0
        assert opt.sigma / sigma_before == pytest.approx(math.exp(1.0 / 11.0), rel=1e-12)

    def test_sigma_fixed_when_rate_equals_target(self):
        opt = self.make()
        # choose the pre-update rate so a failure lands exactly on the target
        h = opt.hyper
        opt._p_succ = h.p_target / (1.0 - h.c_p)
        sigma_before = opt.sigma
        opt.ask()
        opt.tell([1e9])
        assert opt.success_rate == pytest.approx(h.p_target, abs=1e-15)
        assert opt.sigma == pytest.approx(sigma_before, rel=1e-12)


class TestElitism:
    def test_best_value_monotone(self):
        space = SearchSpace.integer_range(5, -10, 10)
        opt = OnePlusOneCmaWithMargin(space, np.full(5, 2.0), seed=3)
        (point,) = opt.ask()
        best = sphere(point)
        opt.tell([best])
        for _ in range(200):
            (point,) = opt.ask()
            value = sphere(point)
            opt.tell([value])
            assert opt.f_best <= best or opt.f_best == best
            best = min(best, value)
            assert opt.f_best == pytest.approx(best)

    def test_failure_keeps_mean_paths_cov_bitwise(self):
        space = SearchSpace.integer_range(4, -10, 10)
        opt = OnePlusOneCmaWithMargin(space, np.full(4, 1.0), seed=4)
        opt.ask()
        opt.tell([0.0])  # incumbent is unbeatable by positive sphere values
        for _ in range(30):
            m, c, pc = opt.mean, opt.cov, opt._p_c.copy()
            (point,) = opt.ask()
            opt.tell([sphere(point) + 1.0])
            assert np.array_equal(opt.mean, m)
            assert np.array_equal(opt.cov, c)
            assert np.array_equal(opt._p_c, pc)

    def test_equal_value_is_accepted(self):
        space = SearchSpace.binary(6)
        opt = OnePlusOneCmaWithMargin(space, np.full(6, 0.5), seed=5)
        opt.ask()
        opt.tell([3.0])
        accepted = 0
        for _ in range(50):
            (point,) = opt.ask()
            opt.tell([3.0])  # always equal: must always be accepted
            accepted += int(np.array_equal(opt.mean, point))
        assert accepted == 50

    def test_mean_is_encoded_candidate_on_success(self):
        space = SearchSpace.integer_range(3, -10, 10, n_continuous=2)
        opt = OnePlusOneCmaWithMargin(space, np.full(5, 2.0), seed=6)
        opt.ask()
        opt.tell([1e9])
        for _ in range(50):
            (point,) = opt.ask()
            value = sphere(point)
            improved = value <= opt.f_best
            opt.tell([value])
            if improved:
                assert np.array_equal(opt.mean, point)
                assert np.array_equal(opt.mean, space.encode(opt.mean))

    def test_discrete_mean_always_admissible(self):
        space = SearchSpace(1, [[0.0, 1.0]] * 2 + [list(range(-10, 11))] * 2)
        opt = OnePlusOneCmaWithMargin(space, np.full(5, 1.4), seed=7)
        drive(opt, sphere, 100)
        encoded = space.encode(opt.mean)
        assert np.array_equal(opt.mean[1:], encoded[1:])


class TestContinuousReduction:
    def test_corrections_stay_identity(self):
        space = SearchSpace.continuous(6)
        opt = OnePlusOneCmaWithMargin(space, np.ones(6), seed=8)
        drive(opt, sphere, 100)
        assert np.array_equal(opt.corrections, np.ones(6))

    def test_converges_on_sphere(self):
        space = SearchSpace.continuous(4)
        opt = OnePlusOneCmaWithMargin(space, np.full(4, 2.0), seed=9)
        drive(opt, sphere, 2000)
        assert opt.f_best < 1e-8


class TestMarginAndPostprocess:
    def test_margin_invariant_after_steps(self):
        space = SearchSpace.integer_range(6, -10, 10)
        opt = OnePlusOneCmaWithMargin(space, np.full(6, 2.0), seed=10)
        alpha = opt.hyper.alpha
        (point,) = opt.ask()
        opt.tell([sphere(point)])
        for _ in range(150):
            (point,) = opt.ask()
            opt.tell([sphere(point)])
            stds = opt.marginal_stds()
            m = opt.mean
            for j in range(6):
                assert flip_probability(space, j, m[j], stds[j]) >= alpha - 1e-9

    def test_mean_never_moved_by_margin(self):
        space = SearchSpace.binary(8)
        opt = OnePlusOneCmaWithMargin(space, np.full(8, 0.5), seed=11)
        opt.ask()
        opt.tell([0.0])
        for _ in range(100):
            (point,) = opt.ask()
            value = 1.0  # always a failure: mean must stay put bit for bit
            before = opt.mean
            opt.tell([value])
            assert np.array_equal(opt.mean, before)

    def test_rescale_keeps_min_correction_at_one(self):
        space = SearchSpace.integer_range(5, -10, 10)
        opt = OnePlusOneCmaWithMargin(space, np.full(5, 2.0), seed=12)
        drive(opt, sphere, 120)
        assert np.min(opt.corrections) == 1.0

    def test_postprocess_disabled_when_requested(self):
        space = SearchSpace.integer_range(5, -10, 10)
        opt = OnePlusOneCmaWithMargin(space, np.full(5, 2.0), seed=12, postprocess=False)
        drive(opt, sphere, 120)
        assert opt._post_mode == "none"


class TestPostprocessDiscrete:
    def test_example(self):
        sigma, a = postprocess_discrete(0.5, np.array([2.0, 4.0]))
        assert sigma == 1.0
        assert np.array_equal(a, [1.0, 2.0])

    def test_identity_when_min_is_one(self):
        sigma, a = postprocess_discrete(0.7, np.array([1.0, 1.0, 1.0]))
        assert sigma == 0.7
        assert np.array_equal(a, np.ones(3))

    def test_products_preserved(self):
        rng = np.random.default_rng(13)
        for _ in range(200):
            sigma = 10.0 ** rng.uniform(-6, 2)
            a = 10.0 ** rng.uniform(-2, 4, size=8)
            s2, a2 = postprocess_discrete(sigma, a)
            assert np.allclose(s2 * a2, sigma * a, rtol=1e-12)
            assert np.min(a2) == 1.0


class TestAblation:
    def test_mean_tracks_raw_sample(self):
        space = SearchSpace.integer_range(3, -10, 10, n_continuous=3)
        opt = OnePlusOneCmaWithMargin(
            space, np.full(6, 2.0), seed=14, discretize_mean=False
        )
        opt.ask()
        opt.tell([1e12])
        saw_non_admissible = False
        for _ in range(100):
            (point,) = opt.ask()
            value = sphere(point)
            raw = opt._pending[2].copy()
            improved = value <= opt.f_best
            opt.tell([value])
            if improved:
                # margin correction may move discrete coordinates afterwards,
                # but continuous ones must equal the raw (non-encoded) sample
                assert np.array_equal(opt.mean[:3], raw[:3])
                if not np.array_equal(opt.mean[3:], space.encode(opt.mean)[3:]):
                    saw_non_admissible = True
        assert saw_non_admissible

    def test_margin_invariant_still_holds(self):
        space = SearchSpace.integer_range(4, -10, 10, n_continuous=2)
        opt = OnePlusOneCmaWithMargin(
            space, np.full(6, 2.0), seed=15, discretize_mean=False
        )
        alpha = opt.hyper.alpha
        (point,) = opt.ask()
        opt.tell([sphere(point)])
        for _ in range(150):
            (point,) = opt.ask()
            opt.tell([sphere(point)])
            stds = opt.marginal_stds()
            m = opt.mean
            for j in space.discrete_indices:
                assert flip_probability(space, j, m[j], stds[j]) >= alpha - 1e-9


class TestFactorUpdates:
    def test_states_agree_with_plain_factorization(self):
        space = SearchSpace.integer_range(5, -10, 10)
        m0 = np.full(5, 2.0)
        plain = OnePlusOneCmaWithMargin(space, m0, seed=16)
        fast = OnePlusOneCmaWithMargin(space, m0, seed=16, factor_updates=True)
        for opt in (plain, fast):
            (point,) = opt.ask()
            opt.tell([sphere(point)])
        for _ in range(100):
            (p1,) = plain.ask()
            (p2,) = fast.ask()
            assert np.array_equal(p1, p2)
            plain.tell([sphere(p1)])
            fast.tell([sphere(p2)])
        assert np.allclose(plain.mean, fast.mean, atol=1e-8)
        assert np.allclose(plain.cov, fast.cov, atol=1e-8)
        assert plain.sigma == pytest.approx(fast.sigma, rel=1e-8)
        assert np.allclose(plain.corrections, fast.corrections, rtol=1e-8)


class TestProtocol:
    def test_double_ask_rejected(self):
        opt = OnePlusOneCmaWithMargin(SearchSpace.continuous(2), np.zeros(2), seed=1)
        opt.ask()
        with pytest.raises(RuntimeError):
            opt.ask()

    def test_tell_before_ask_rejected(self):
        opt = OnePlusOneCmaWithMargin(SearchSpace.continuous(2), np.zeros(2), seed=1)
        with pytest.raises(RuntimeError):
            opt.tell([1.0])

    def test_solves_one_max_quickly(self):
        n = 10
        space = SearchSpace.binary(n)
        opt = OnePlusOneCmaWithMargin(space, np.full(n, 0.5), seed=17)
        objective = lambda v: -float(np.sum(v))  # noqa: E731 -- maximize via negation
        evals = 0
        best = 0.0
        while evals < 20000 and best < n:
            points = opt.ask()
            values = [objective(p) for p in points]
            evals += len(points)
            best = max(best, -values[0])
            opt.tell(values)
        assert best == n
